//! Variational quantum classifier: feature map, trainable ansatz and a
//! bitstring readout rule, trained with the derivative-free optimizer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{nll, Prediction};
use crate::circuits::{from_layout, real_amplitudes, zz_feature_map, Circuit, Layout, ParamVector};
use crate::error::{invalid, Error, Result};
use crate::optim::{cobyla_minimize, CobylaOptions};
use crate::par;

/// How basis-state probabilities are pooled into classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutRule {
    /// Class = popcount(bitstring) mod 2.
    Parity,
    /// Class = bitstring integer mod C.
    Modulo(usize),
}

impl ReadoutRule {
    pub fn for_classes(n_classes: usize) -> Result<Self> {
        match n_classes {
            2 => Ok(ReadoutRule::Parity),
            3 => Ok(ReadoutRule::Modulo(3)),
            c => Err(invalid(format!("VQC supports 2 or 3 classes, got {c}"))),
        }
    }

    pub fn n_classes(self) -> usize {
        match self {
            ReadoutRule::Parity => 2,
            ReadoutRule::Modulo(c) => c,
        }
    }

    pub fn class_of(self, basis: usize) -> usize {
        match self {
            ReadoutRule::Parity => basis.count_ones() as usize % 2,
            ReadoutRule::Modulo(c) => basis % c,
        }
    }

    pub fn pool(self, probabilities: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_classes()];
        for (b, p) in probabilities.iter().enumerate() {
            out[self.class_of(b)] += p;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VqcClassifier {
    feature_map: Circuit,
    ansatz: Circuit,
    full: Circuit,
    pub params: ParamVector,
    pub readout_rule: ReadoutRule,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct VqcDocument {
    feature_map: Layout,
    ansatz: Layout,
    values: Vec<f64>,
    readout_rule: ReadoutRule,
    seed: u64,
}

impl VqcClassifier {
    /// ZZ feature map (1 rep) followed by RealAmplitudes (3 reps).
    pub fn standard(n_features: usize, n_classes: usize, seed: u64) -> Result<Self> {
        Self::new(zz_feature_map(n_features, 1)?, real_amplitudes(n_features, 3)?, n_classes, seed)
    }

    pub fn new(feature_map: Circuit, ansatz: Circuit, n_classes: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = ansatz.init_params(&mut rng);
        Self::with_params(feature_map, ansatz, params, ReadoutRule::for_classes(n_classes)?, seed)
    }

    fn with_params(
        feature_map: Circuit,
        ansatz: Circuit,
        params: ParamVector,
        readout_rule: ReadoutRule,
        seed: u64,
    ) -> Result<Self> {
        if feature_map.n_trainable() != 0 || ansatz.n_inputs() != 0 {
            return Err(invalid("feature map must be fixed and the ansatz input-free"));
        }
        if params.layout != *ansatz.layout() || params.len() != ansatz.n_trainable() {
            return Err(invalid("parameters do not match the ansatz"));
        }
        if (1usize << feature_map.n_qubits()) < readout_rule.n_classes() {
            return Err(invalid("register too small for the class count"));
        }
        let layout = Layout::new(
            format!("{}+{}", feature_map.layout().template, ansatz.layout().template),
            [feature_map.layout().shape.clone(), ansatz.layout().shape.clone()].concat(),
        );
        let full = feature_map.then(&ansatz, layout)?;
        Ok(VqcClassifier { feature_map, ansatz, full, params, readout_rule, seed })
    }

    pub fn n_classes(&self) -> usize {
        self.readout_rule.n_classes()
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn class_probabilities_with(&self, theta: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.readout_rule.pool(&self.full.run(theta, x)?.probabilities()))
    }

    pub fn class_probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.class_probabilities_with(&self.params.values, x)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Prediction> {
        let p = self.class_probabilities(x)?;
        Ok(Prediction::Class { label: super::argmax(&p), probabilities: p })
    }

    pub fn predict_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<Prediction>> {
        par::try_map_range(xs.len(), |i| self.forward(&xs[i]))
    }

    /// Mean cross-entropy at `theta`.
    pub fn loss_with(&self, theta: &[f64], xs: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
        let parts = par::try_map_range(xs.len(), |i| Ok::<_, Error>(nll(self.class_probabilities_with(theta, &xs[i])?[labels[i]])))?;
        Ok(parts.iter().sum::<f64>() / xs.len() as f64)
    }

    fn check(&self, xs: &[Vec<f64>], labels: &[usize]) -> Result<()> {
        if xs.is_empty() {
            return Err(invalid("empty training set"));
        }
        if xs.len() != labels.len() {
            return Err(invalid(format!("{} labels for {} rows", labels.len(), xs.len())));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= self.n_classes()) {
            return Err(invalid(format!("label {bad} out of range")));
        }
        for x in xs {
            if x.len() != self.feature_map.n_inputs() {
                return Err(invalid(format!("expected {} features, got {}", self.feature_map.n_inputs(), x.len())));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = VqcDocument {
            feature_map: self.feature_map.layout().clone(),
            ansatz: self.ansatz.layout().clone(),
            values: self.params.values.clone(),
            readout_rule: self.readout_rule,
            seed: self.seed,
        };
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: VqcDocument = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        let fm = from_layout(&doc.feature_map)?;
        let ansatz = from_layout(&doc.ansatz)?;
        let params = ParamVector { values: doc.values, layout: doc.ansatz };
        Self::with_params(fm, ansatz, params, doc.readout_rule, doc.seed)
    }
}

/// Minimize mean cross-entropy with the simplex trust-region method.
/// Returns the best loss after each optimizer step.
pub fn vqc_train(clf: &mut VqcClassifier, xs: &[Vec<f64>], labels: &[usize], opts: &CobylaOptions) -> Result<Vec<f64>> {
    clf.check(xs, labels)?;
    let objective = |theta: &[f64]| clf.loss_with(theta, xs, labels).unwrap_or(f64::NAN);
    let res = cobyla_minimize(objective, &clf.params.values, opts)?;
    clf.params.values = res.x;
    Ok(res.history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::z_feature_map;
    use crate::qsim::GateKind;

    #[test]
    fn ternary_pool_sizes() {
        let mut sizes = [0; 3];
        for b in 0..16 {
            sizes[ReadoutRule::Modulo(3).class_of(b)] += 1;
        }
        assert_eq!(sizes, [6, 5, 5]);
        let uniform = vec![1.0 / 16.0; 16];
        assert_eq!(ReadoutRule::Parity.pool(&uniform), vec![0.5, 0.5]);
    }

    fn one_qubit() -> VqcClassifier {
        let mut ansatz = Circuit::new(1, 0, Layout::new("ry", vec![1])).unwrap();
        let a = ansatz.new_param();
        ansatz.push(GateKind::Ry, &[0], &[a]).unwrap();
        let fm = z_feature_map(1, 1).unwrap();
        VqcClassifier::new(fm, ansatz, 2, 4).unwrap()
    }

    #[test]
    fn one_qubit_threshold() {
        // After H·RZ(2x), RY(θ) rotates the equator; with θ near −π/2 the
        // parity readout thresholds cos(2x).
        let mut clf = one_qubit();
        let xs: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 / 29.0 * 1.4]).collect();
        let y: Vec<usize> = xs.iter().map(|x| usize::from(x[0] >= std::f64::consts::FRAC_PI_4)).collect();
        let h = vqc_train(&mut clf, &xs, &y, &CobylaOptions::default()).unwrap();
        assert!(h.last() <= h.first());
        let pred: Vec<usize> = clf.predict_batch(&xs).unwrap().iter().map(|p| p.label().unwrap()).collect();
        assert!(super::super::accuracy(&pred, &y) >= 0.9);
    }

    #[test]
    fn standard_shape_and_json() {
        let clf = VqcClassifier::standard(4, 3, 2).unwrap();
        assert_eq!(clf.n_params(), 16);
        let p = clf.class_probabilities(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(VqcClassifier::from_json(&clf.to_json().unwrap()).unwrap(), clf);
        assert!(VqcClassifier::standard(4, 4, 2).is_err());
    }
}
