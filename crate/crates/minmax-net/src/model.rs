//! MinMax network representation and evaluation.
//!
//! A network is an ordered list of neurons; each neuron is the min or max of
//! affine basic neurons over the augmented input `x = (1, x')`. The network
//! output is the sum of the neuron outputs, so the whole predictor is
//! continuous and piecewise linear while staying linear in the weights
//! between edges.

use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::dot;
use crate::scalar::Real;

/// Input vector augmented with a leading 1, so affine maps become linear in
/// the weights. The bias-first convention is fixed globally.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedInput<T>(Vec<T>);

impl<T: Real> AugmentedInput<T> {
    /// Augments a raw input `x'` into `(1, x')`.
    pub fn from_raw(raw: &[T]) -> Result<Self> {
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "input components",
            });
        }
        let mut values = Vec::with_capacity(raw.len() + 1);
        values.push(T::one());
        values.extend_from_slice(raw);
        Ok(Self(values))
    }

    /// Wraps an already-augmented vector, validating the invariants.
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() || values[0] != T::one() {
            return Err(Error::InvalidModel(
                "augmented input must start with an exact 1".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "input components",
            });
        }
        Ok(Self(values))
    }

    /// Full augmented vector, bias first.
    pub fn values(&self) -> &[T] {
        &self.0
    }

    /// Raw input without the bias component.
    pub fn raw(&self) -> &[T] {
        &self.0[1..]
    }

    /// Length of the augmented vector (`N + 1`).
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Euclidean norm of the augmented vector; at least 1.
    pub fn norm(&self) -> T {
        crate::numerics::norm(&self.0)
    }
}

/// One affine piece candidate: `z = x^T w` over the augmented input.
#[derive(Debug, Clone, PartialEq)]
pub struct BasicNeuron<T> {
    pub weights: Vec<T>,
}

impl<T: Real> BasicNeuron<T> {
    pub fn new(weights: Vec<T>) -> Self {
        Self { weights }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![T::zero(); dim],
        }
    }

    pub fn output(&self, x: &AugmentedInput<T>) -> T {
        dot(&self.weights, x.values())
    }
}

/// Whether a neuron combines its basic neurons with min or max.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeuronKind {
    Min,
    Max,
}

impl NeuronKind {
    /// Sign convention used by edge constraints: +1 for Min, -1 for Max.
    pub fn constraint_sign<T: Real>(self) -> T {
        match self {
            NeuronKind::Min => T::one(),
            NeuronKind::Max => -T::one(),
        }
    }
}

/// Min- or max-combination of at least one basic neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct Neuron<T> {
    pub kind: NeuronKind,
    pub basics: Vec<BasicNeuron<T>>,
}

impl<T: Real> Neuron<T> {
    pub fn new(kind: NeuronKind, basics: Vec<BasicNeuron<T>>) -> Self {
        assert!(!basics.is_empty(), "a neuron needs at least one basic neuron");
        Self { kind, basics }
    }

    pub fn basic_count(&self) -> usize {
        self.basics.len()
    }

    /// Basic-neuron outputs at `x`, in index order.
    pub fn basic_outputs(&self, x: &AugmentedInput<T>) -> Vec<T> {
        self.basics.iter().map(|b| b.output(x)).collect()
    }

    /// Index of the active basic neuron: the lowest index attaining the
    /// extremum, so ties resolve deterministically.
    pub fn active_index(&self, x: &AugmentedInput<T>) -> usize {
        let mut best = 0;
        let mut best_val = self.basics[0].output(x);
        for (k, b) in self.basics.iter().enumerate().skip(1) {
            let z = b.output(x);
            let better = match self.kind {
                NeuronKind::Min => z < best_val,
                NeuronKind::Max => z > best_val,
            };
            if better {
                best = k;
                best_val = z;
            }
        }
        best
    }

    pub fn output(&self, x: &AugmentedInput<T>) -> T {
        self.basics[self.active_index(x)].output(x)
    }
}

/// Per-neuron index of the active basic neuron at a probed input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivationPattern(pub Vec<usize>);

/// Sum of Min and Max neurons over a shared augmented input dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    input_dim: usize,
    neurons: Vec<Neuron<T>>,
}

impl<T: Real> Network<T> {
    pub fn new(input_dim: usize, neurons: Vec<Neuron<T>>) -> Result<Self> {
        if neurons.is_empty() {
            return Err(Error::InvalidModel("network needs at least one neuron".into()));
        }
        for n in &neurons {
            if n.basics.is_empty() {
                return Err(Error::InvalidModel(
                    "every neuron needs at least one basic neuron".into(),
                ));
            }
            for b in &n.basics {
                if b.weights.len() != input_dim + 1 {
                    return Err(Error::DimensionMismatch {
                        what: "basic neuron weights",
                        expected: input_dim + 1,
                        actual: b.weights.len(),
                    });
                }
                if b.weights.iter().any(|w| !w.is_finite()) {
                    return Err(Error::NonFinite {
                        what: "basic neuron weights",
                    });
                }
            }
        }
        Ok(Self { input_dim, neurons })
    }

    /// Network with a single neuron holding one all-zero basic neuron.
    pub fn single_zero(input_dim: usize, kind: NeuronKind) -> Self {
        Self {
            input_dim,
            neurons: vec![Neuron::new(kind, vec![BasicNeuron::zeros(input_dim + 1)])],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Augmented input dimension `N + 1`.
    pub fn augmented_dim(&self) -> usize {
        self.input_dim + 1
    }

    pub fn neurons(&self) -> &[Neuron<T>] {
        &self.neurons
    }

    pub fn neurons_mut(&mut self) -> &mut Vec<Neuron<T>> {
        &mut self.neurons
    }

    pub fn neuron_count(&self) -> usize {
        self.neurons.len()
    }

    pub fn basic_count(&self) -> usize {
        self.neurons.iter().map(|n| n.basic_count()).sum()
    }

    /// Total stacked-weight dimension over all neurons and basics.
    pub fn stacked_dim(&self) -> usize {
        self.basic_count() * self.augmented_dim()
    }

    fn check_input(&self, x: &AugmentedInput<T>) -> Result<()> {
        if x.dim() != self.augmented_dim() {
            return Err(Error::DimensionMismatch {
                what: "augmented input",
                expected: self.augmented_dim(),
                actual: x.dim(),
            });
        }
        Ok(())
    }

    /// Network output: sum over neurons of the active basic-neuron output.
    pub fn evaluate(&self, x: &AugmentedInput<T>) -> Result<T> {
        self.check_input(x)?;
        let mut sum = T::zero();
        for n in &self.neurons {
            sum += n.output(x);
        }
        Ok(sum)
    }

    /// Evaluation under a caller-supplied activation pattern. Equals
    /// `evaluate` whenever the pattern was produced for this `x` (same
    /// floating-point summation order).
    pub fn evaluate_with_pattern(&self, x: &AugmentedInput<T>, pattern: &ActivationPattern) -> T {
        let mut sum = T::zero();
        for (n, &k) in self.neurons.iter().zip(pattern.0.iter()) {
            sum += n.basics[k].output(x);
        }
        sum
    }

    /// Lowest-index activation pattern at `x`.
    pub fn activation_pattern(&self, x: &AugmentedInput<T>) -> Result<ActivationPattern> {
        self.check_input(x)?;
        Ok(ActivationPattern(
            self.neurons.iter().map(|n| n.active_index(x)).collect(),
        ))
    }

    /// Stacked activation `A_j(x)` per neuron: block `k*` holds `x`, the
    /// other blocks are zero.
    pub fn stacked_activation(
        &self,
        x: &AugmentedInput<T>,
        pattern: &ActivationPattern,
    ) -> Vec<Vec<T>> {
        let d = self.augmented_dim();
        self.neurons
            .iter()
            .zip(pattern.0.iter())
            .map(|(n, &k)| {
                let mut block = vec![T::zero(); n.basic_count() * d];
                block[k * d..(k + 1) * d].copy_from_slice(x.values());
                block
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Example-1 pyramid references
// ---------------------------------------------------------------------------

/// Closed form of the unit pyramid: `max(0, min(x1+1, x2+1, -x1+1, -x2+1))`.
pub fn pyramid_closed_form<T: Real>(x1: T, x2: T) -> T {
    let m = (x1 + T::one())
        .min(x2 + T::one())
        .min(T::one() - x1)
        .min(T::one() - x2);
    m.max(T::zero())
}

/// MinMax network that represents the unit pyramid exactly: one Min neuron
/// holding the four roof planes plus one Max neuron whose basics are zero and
/// the negated roof planes, so the sum reproduces `max(0, m)` = `m + max(0, -m)`.
pub fn pyramid_minmax_network<T: Real>() -> Network<T> {
    let one = T::one();
    let zero = T::zero();
    let min_neuron = Neuron::new(
        NeuronKind::Min,
        vec![
            BasicNeuron::new(vec![one, one, zero]),  // x1 + 1
            BasicNeuron::new(vec![one, zero, one]),  // x2 + 1
            BasicNeuron::new(vec![one, -one, zero]), // -x1 + 1
            BasicNeuron::new(vec![one, zero, -one]), // -x2 + 1
        ],
    );
    let max_neuron = Neuron::new(
        NeuronKind::Max,
        vec![
            BasicNeuron::new(vec![zero, zero, zero]), // 0
            BasicNeuron::new(vec![-one, -one, zero]), // -x1 - 1
            BasicNeuron::new(vec![-one, zero, -one]), // -x2 - 1
            BasicNeuron::new(vec![-one, one, zero]),  // x1 - 1
            BasicNeuron::new(vec![-one, zero, one]),  // x2 - 1
        ],
    );
    Network::new(2, vec![min_neuron, max_neuron]).expect("pyramid network is valid")
}

/// Depth-2 ReLU reference for the pyramid, with the printed weights:
/// `y = max(0, 1 - 0.5 * sum_j max(0, z_2j))`.
pub fn relu_pyramid_reference<T: Real>(x1: T, x2: T) -> T {
    let relu = |v: T| v.max(T::zero());
    let z21 = -x1 - x2;
    let z22 = x1 - x2;
    let z23 = x1 + x2;
    let z24 = -x1 + x2;
    let half = T::from_f64(0.5).expect("0.5 converts");
    let z11 = T::one() - half * (relu(z21) + relu(z22) + relu(z23) + relu(z24));
    relu(z11)
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct NeuronDoc<T> {
    kind: NeuronKind,
    weights: Vec<Vec<T>>,
}

#[derive(Serialize, Deserialize)]
struct NetworkDoc<T> {
    input_dim: usize,
    neurons: Vec<NeuronDoc<T>>,
}

impl<T: Real + Serialize + DeserializeOwned> Network<T> {
    /// Serializes to the JSON document format. Finite doubles round-trip
    /// bit-exactly through this encoding.
    pub fn to_json(&self) -> Result<String> {
        let doc = NetworkDoc {
            input_dim: self.input_dim,
            neurons: self
                .neurons
                .iter()
                .map(|n| NeuronDoc {
                    kind: n.kind,
                    weights: n.basics.iter().map(|b| b.weights.clone()).collect(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: NetworkDoc<T> = serde_json::from_str(text)?;
        let neurons = doc
            .neurons
            .into_iter()
            .map(|n| {
                if n.weights.is_empty() {
                    return Err(Error::InvalidModel("neuron without basic neurons".into()));
                }
                Ok(Neuron::new(
                    n.kind,
                    n.weights.into_iter().map(BasicNeuron::new).collect(),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Network::new(doc.input_dim, neurons)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_json()?.as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut text = String::new();
        std::fs::File::open(path)?.read_to_string(&mut text)?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn aug(raw: &[f64]) -> AugmentedInput<f64> {
        AugmentedInput::from_raw(raw).unwrap()
    }

    #[test]
    fn augmentation_is_bias_first() {
        let x = aug(&[2.0, -3.0]);
        assert_eq!(x.values(), &[1.0, 2.0, -3.0]);
        assert_eq!(x.raw(), &[2.0, -3.0]);
        assert!(AugmentedInput::new(vec![0.5, 1.0]).is_err());
    }

    #[test]
    fn pyramid_minmax_matches_printed_examples() {
        let net = pyramid_minmax_network::<f64>();
        // concave part min(1,1,1,1) = 1, convex part 0
        let at_origin = net.evaluate(&aug(&[0.0, 0.0])).unwrap();
        assert_eq!(at_origin, 1.0);
        let v = net.evaluate(&aug(&[0.5, 0.25])).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_basic_neuron_is_affine_identity() {
        let net = Network::new(
            1,
            vec![Neuron::new(
                NeuronKind::Min,
                vec![BasicNeuron::new(vec![0.0, 1.0])],
            )],
        )
        .unwrap();
        assert_eq!(net.evaluate(&aug(&[2.0])).unwrap(), 2.0);
    }

    #[test]
    fn activation_pattern_takes_lowest_index_on_ties() {
        // min neuron with z = (2, 1, 3) -> index 1; ties -> lowest
        let min = Neuron::new(
            NeuronKind::Min,
            vec![
                BasicNeuron::new(vec![2.0, 0.0]),
                BasicNeuron::new(vec![1.0, 0.0]),
                BasicNeuron::new(vec![3.0, 0.0]),
            ],
        );
        let net = Network::new(1, vec![min]).unwrap();
        let p = net.activation_pattern(&aug(&[0.0])).unwrap();
        assert_eq!(p.0, vec![1]);

        let tie = Neuron::new(
            NeuronKind::Min,
            vec![BasicNeuron::new(vec![1.0, 0.0]), BasicNeuron::new(vec![1.0, 0.0])],
        );
        let net = Network::new(1, vec![tie]).unwrap();
        assert_eq!(net.activation_pattern(&aug(&[0.0])).unwrap().0, vec![0]);

        let max_tie = Neuron::new(
            NeuronKind::Max,
            vec![
                BasicNeuron::new(vec![-1.0, 0.0]),
                BasicNeuron::new(vec![5.0, 0.0]),
                BasicNeuron::new(vec![5.0, 0.0]),
            ],
        );
        let net = Network::new(1, vec![max_tie]).unwrap();
        assert_eq!(net.activation_pattern(&aug(&[0.0])).unwrap().0, vec![1]);
    }

    #[test]
    fn stacked_activation_blocks() {
        let min = Neuron::new(
            NeuronKind::Min,
            vec![
                BasicNeuron::new(vec![9.0, 9.0]),
                BasicNeuron::new(vec![0.0, 0.0]),
                BasicNeuron::new(vec![9.0, 9.0]),
            ],
        );
        let net = Network::new(1, vec![min]).unwrap();
        let x = aug(&[0.5]);
        let p = net.activation_pattern(&x).unwrap();
        assert_eq!(p.0, vec![1]);
        let blocks = net.stacked_activation(&x, &p);
        assert_eq!(blocks[0], vec![0.0, 0.0, 1.0, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn activation_identity_on_pyramid() {
        let net = pyramid_minmax_network::<f64>();
        for i in 0..10 {
            for j in 0..10 {
                let x = aug(&[-2.0 + 0.44 * i as f64, -2.0 + 0.44 * j as f64]);
                let p = net.activation_pattern(&x).unwrap();
                let direct = net.evaluate(&x).unwrap();
                let via_pattern = net.evaluate_with_pattern(&x, &p);
                assert_eq!(direct, via_pattern);
            }
        }
    }

    #[test]
    fn relu_reference_matches_printed_examples() {
        assert_eq!(relu_pyramid_reference(0.0f64, 0.0), 1.0);
        assert_eq!(relu_pyramid_reference(1.0f64, 0.0), 0.0);
        assert!((relu_pyramid_reference(0.5f64, 0.25) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let mut net = pyramid_minmax_network::<f64>();
        // make the weights irrational-ish to exercise full precision
        net.neurons_mut()[0].basics[0].weights[1] = 1.0 / 3.0;
        net.neurons_mut()[1].basics[2].weights[0] = -2.0f64.sqrt();
        let text = net.to_json().unwrap();
        let back = Network::<f64>::from_json(&text).unwrap();
        assert_eq!(net, back);
    }

    #[test]
    fn network_validation_errors() {
        assert!(Network::<f64>::new(1, vec![]).is_err());
        let bad_dim = Neuron::new(NeuronKind::Min, vec![BasicNeuron::new(vec![0.0])]);
        assert!(Network::new(1, vec![bad_dim]).is_err());
    }
}
