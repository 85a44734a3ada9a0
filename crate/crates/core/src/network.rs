//! Fully connected ReLU networks in the NNet text format.
//!
//! Hidden layers apply `max(0, W a + b)`; the output layer is affine only.
//! Every decimal in the file is converted to an exact rational.

use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::formula::InputBox;
use crate::rational::{checked_div, parse_decimal, to_exact_string, Rational};

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("inconsistent network shape: {0}")]
    Shape(String),
    #[error("expected a point of dimension {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("input {index} = {value} lies outside [{min}, {max}]")]
    OutOfDomain {
        index: usize,
        value: String,
        min: String,
        max: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Addresses one hidden neuron: `layer` is 1-based over hidden layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct NeuronRef {
    pub layer: usize,
    pub index: usize,
}

impl std::fmt::Display for NeuronRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "L{}N{}", self.layer, self.index)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    RawToNormalized,
    NormalizedToRaw,
}

/// What to do with raw inputs outside `[input_mins, input_maxes]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ClampPolicy {
    #[default]
    Clamp,
    Reject,
}

/// How an output vector selects its label.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionRule {
    /// The smallest output wins (ACAS Xu advisories).
    #[default]
    Argmin,
    Argmax,
}

impl std::str::FromStr for SelectionRule {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "argmin" | "min" => Ok(SelectionRule::Argmin),
            "argmax" | "max" => Ok(SelectionRule::Argmax),
            other => Err(format!("unknown selection rule `{other}`")),
        }
    }
}

/// The label chosen by a [`SelectionRule`]; ties are reported, never broken.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum LabelChoice {
    Unique(usize),
    Tie(Vec<usize>),
}

pub fn select_label(outputs: &[Rational], rule: SelectionRule) -> LabelChoice {
    let best = match rule {
        SelectionRule::Argmin => outputs.iter().min(),
        SelectionRule::Argmax => outputs.iter().max(),
    };
    let Some(best) = best else {
        return LabelChoice::Tie(Vec::new());
    };
    let winners: Vec<usize> = outputs
        .iter()
        .enumerate()
        .filter(|(_, v)| *v == best)
        .map(|(i, _)| i)
        .collect();
    if winners.len() == 1 {
        LabelChoice::Unique(winners[0])
    } else {
        LabelChoice::Tie(winners)
    }
}

const ACAS_LABELS: [&str; 5] = ["COC", "WL", "WR", "SL", "SR"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Network {
    pub name: String,
    layer_sizes: Vec<usize>,
    /// `weights[k][row][col]` maps layer `k` activations to layer `k + 1`.
    weights: Vec<Vec<Vec<Rational>>>,
    biases: Vec<Vec<Rational>>,
    input_mins: Vec<Rational>,
    input_maxes: Vec<Rational>,
    /// Input means followed by the output mean.
    means: Vec<Rational>,
    /// Input ranges followed by the output range.
    ranges: Vec<Rational>,
}

impl Network {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        layer_sizes: Vec<usize>,
        weights: Vec<Vec<Vec<Rational>>>,
        biases: Vec<Vec<Rational>>,
        input_mins: Vec<Rational>,
        input_maxes: Vec<Rational>,
        means: Vec<Rational>,
        ranges: Vec<Rational>,
    ) -> Result<Network, NetworkError> {
        let shape = |m: String| Err(NetworkError::Shape(m));
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return shape(format!("layer sizes {layer_sizes:?} must be >= 2 positive entries"));
        }
        if weights.len() != layer_sizes.len() - 1 || biases.len() != weights.len() {
            return shape("one weight matrix and bias vector per layer".into());
        }
        for (k, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.len() != layer_sizes[k + 1] || b.len() != layer_sizes[k + 1] {
                return shape(format!("layer {} has {} rows, expected {}", k + 1, w.len(), layer_sizes[k + 1]));
            }
            if let Some(row) = w.iter().find(|r| r.len() != layer_sizes[k]) {
                return shape(format!(
                    "layer {} row has {} columns, expected {}",
                    k + 1,
                    row.len(),
                    layer_sizes[k]
                ));
            }
        }
        let n_in = layer_sizes[0];
        if input_mins.len() != n_in || input_maxes.len() != n_in {
            return shape("input bounds must match the input dimension".into());
        }
        if means.len() != n_in + 1 || ranges.len() != n_in + 1 {
            return shape("means and ranges need input dimension + 1 entries".into());
        }
        if ranges.iter().any(|r| !r.is_positive()) {
            return shape("normalization ranges must be strictly positive".into());
        }
        if input_mins.iter().zip(&input_maxes).any(|(l, u)| l > u) {
            return shape("input minimum exceeds maximum".into());
        }
        Ok(Network {
            name: name.into(),
            layer_sizes,
            weights,
            biases,
            input_mins,
            input_maxes,
            means,
            ranges,
        })
    }

    /// A network with neutral normalization (mean 0, range 1) and an
    /// unbounded-in-practice input domain of `[-1e6, 1e6]`.
    pub fn from_layers(
        name: impl Into<String>,
        weights: Vec<Vec<Vec<Rational>>>,
        biases: Vec<Vec<Rational>>,
    ) -> Result<Network, NetworkError> {
        let Some(first) = weights.first() else {
            return Err(NetworkError::Shape("no layers".into()));
        };
        let n_in = first.first().map_or(0, |r| r.len());
        let mut sizes = vec![n_in];
        sizes.extend(weights.iter().map(|w| w.len()));
        let big = Rational::from_integer(1_000_000.into());
        Network::new(
            name,
            sizes,
            weights,
            biases,
            vec![-big.clone(); n_in],
            vec![big; n_in],
            vec![Rational::zero(); n_in + 1],
            vec![Rational::from_integer(1.into()); n_in + 1],
        )
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("non-empty")
    }

    /// Number of hidden (ReLU) layers.
    pub fn hidden_layers(&self) -> usize {
        self.layer_sizes.len() - 2
    }

    pub fn hidden_neurons(&self) -> usize {
        self.layer_sizes[1..self.layer_sizes.len() - 1].iter().sum()
    }

    /// Weight matrix feeding layer `k` (1-based; `k = hidden_layers() + 1`
    /// is the output layer).
    pub fn weights(&self, k: usize) -> &[Vec<Rational>] {
        &self.weights[k - 1]
    }

    pub fn biases(&self, k: usize) -> &[Rational] {
        &self.biases[k - 1]
    }

    pub fn input_mins(&self) -> &[Rational] {
        &self.input_mins
    }

    pub fn input_maxes(&self) -> &[Rational] {
        &self.input_maxes
    }

    pub fn means(&self) -> &[Rational] {
        &self.means
    }

    pub fn ranges(&self) -> &[Rational] {
        &self.ranges
    }

    /// Output names: the ACAS Xu advisories for five outputs, `y0..` otherwise.
    pub fn output_labels(&self) -> Vec<String> {
        if self.output_dim() == ACAS_LABELS.len() {
            ACAS_LABELS.iter().map(|s| s.to_string()).collect()
        } else {
            (0..self.output_dim()).map(|i| format!("y{i}")).collect()
        }
    }

    /// Resolves an output by label (`COC`) or index (`y0`, `0`).
    pub fn output_index(&self, name: &str) -> Option<usize> {
        let labels = self.output_labels();
        if let Some(i) = labels.iter().position(|l| l.eq_ignore_ascii_case(name)) {
            return Some(i);
        }
        let digits = name.strip_prefix(['y', 'Y']).unwrap_or(name);
        digits.parse().ok().filter(|i| *i < self.output_dim())
    }

    /// The valid input domain expressed in normalized coordinates.
    pub fn normalized_domain(&self) -> InputBox {
        let bounds = (0..self.input_dim())
            .map(|i| {
                (
                    (&self.input_mins[i] - &self.means[i]) / &self.ranges[i],
                    (&self.input_maxes[i] - &self.means[i]) / &self.ranges[i],
                )
            })
            .collect();
        InputBox::new(bounds).expect("mins <= maxes and ranges > 0")
    }

    pub fn normalize_point(
        &self,
        point: &[Rational],
        direction: Direction,
        policy: ClampPolicy,
    ) -> Result<Vec<Rational>, NetworkError> {
        self.check_dim(point)?;
        match direction {
            Direction::RawToNormalized => point
                .iter()
                .enumerate()
                .map(|(i, raw)| {
                    let (min, max) = (&self.input_mins[i], &self.input_maxes[i]);
                    let clamped = if raw < min || raw > max {
                        if policy == ClampPolicy::Reject {
                            return Err(NetworkError::OutOfDomain {
                                index: i,
                                value: to_exact_string(raw),
                                min: to_exact_string(min),
                                max: to_exact_string(max),
                            });
                        }
                        log::warn!("input {i} clamped into [{}, {}]", to_exact_string(min), to_exact_string(max));
                        raw.clamp(min, max).clone()
                    } else {
                        raw.clone()
                    };
                    Ok(checked_div(&(clamped - &self.means[i]), &self.ranges[i]).expect("positive range"))
                })
                .collect(),
            Direction::NormalizedToRaw => Ok(point
                .iter()
                .enumerate()
                .map(|(i, v)| v * &self.ranges[i] + &self.means[i])
                .collect()),
        }
    }

    /// Output value in the network's own units mapped back to raw units.
    pub fn denormalize_output(&self, value: &Rational) -> Rational {
        let n = self.input_dim();
        value * &self.ranges[n] + &self.means[n]
    }

    pub fn normalize_output(&self, raw: &Rational) -> Rational {
        let n = self.input_dim();
        (raw - &self.means[n]) / &self.ranges[n]
    }

    fn check_dim(&self, point: &[Rational]) -> Result<(), NetworkError> {
        if point.len() != self.input_dim() {
            return Err(NetworkError::Dimension {
                expected: self.input_dim(),
                found: point.len(),
            });
        }
        Ok(())
    }

    /// Exact forward pass in normalized input space; returns output z-values.
    pub fn evaluate_exact(&self, input: &[Rational]) -> Result<Vec<Rational>, NetworkError> {
        self.check_dim(input)?;
        let mut act: Vec<Rational> = input.to_vec();
        let last = self.weights.len() - 1;
        for (k, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            act = w
                .iter()
                .zip(b)
                .map(|(row, bias)| {
                    let z = row.iter().zip(&act).fold(bias.clone(), |acc, (wij, aj)| acc + wij * aj);
                    if k < last && z.is_negative() {
                        Rational::zero()
                    } else {
                        z
                    }
                })
                .collect();
        }
        Ok(act)
    }

    /// Hidden pre-activations (z-values) per hidden layer for one input.
    pub fn hidden_pre_activations(&self, input: &[Rational]) -> Result<Vec<Vec<Rational>>, NetworkError> {
        self.check_dim(input)?;
        let mut act: Vec<Rational> = input.to_vec();
        let mut out = Vec::with_capacity(self.hidden_layers());
        for (w, b) in self.weights.iter().zip(&self.biases).take(self.hidden_layers()) {
            let z: Vec<Rational> = w
                .iter()
                .zip(b)
                .map(|(row, bias)| row.iter().zip(&act).fold(bias.clone(), |acc, (wij, aj)| acc + wij * aj))
                .collect();
            act = z.iter().map(|v| if v.is_negative() { Rational::zero() } else { v.clone() }).collect();
            out.push(z);
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Network, NetworkError> {
        let file = std::fs::File::open(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut net = parse_nnet(std::io::BufReader::new(file))?;
        net.name = name;
        Ok(net)
    }

    /// Renders the network in NNet format with exact decimals where the
    /// values terminate and `p/q`-free decimals rounded to 17 places otherwise.
    pub fn to_nnet(&self) -> String {
        let fmt = |r: &Rational| {
            crate::rational::to_terminating_decimal(r).unwrap_or_else(|| crate::rational::to_decimal(r, 17))
        };
        let join = |vals: &[Rational]| vals.iter().map(fmt).collect::<Vec<_>>().join(",") + ",";
        let mut s = String::new();
        let _ = writeln!(s, "// {}", self.name);
        let max = self.layer_sizes.iter().max().copied().unwrap_or(0);
        let _ = writeln!(
            s,
            "{},{},{},{},",
            self.layer_sizes.len() - 1,
            self.input_dim(),
            self.output_dim(),
            max
        );
        let _ = writeln!(
            s,
            "{},",
            self.layer_sizes.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
        );
        let _ = writeln!(s, "0,");
        let _ = writeln!(s, "{}", join(&self.input_mins));
        let _ = writeln!(s, "{}", join(&self.input_maxes));
        let _ = writeln!(s, "{}", join(&self.means));
        let _ = writeln!(s, "{}", join(&self.ranges));
        for (w, b) in self.weights.iter().zip(&self.biases) {
            for row in w {
                let _ = writeln!(s, "{}", join(row));
            }
            for v in b {
                let _ = writeln!(s, "{},", fmt(v));
            }
        }
        s
    }
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> Lines<R> {
    /// Next non-comment, non-blank line split into numeric tokens.
    fn next_values(&mut self, what: &str) -> Result<(usize, Vec<String>), NetworkError> {
        loop {
            let Some(line) = self.inner.next() else {
                return Err(NetworkError::Parse {
                    line: self.line_no + 1,
                    message: format!("unexpected end of file, expected {what}"),
                });
            };
            self.line_no += 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with("//") {
                continue;
            }
            let tokens = trimmed
                .split(',')
                .map(|t| t.trim())
                .filter(|t| !t.is_empty())
                .map(String::from)
                .collect();
            return Ok((self.line_no, tokens));
        }
    }

    fn rationals(&mut self, what: &str, expected: usize) -> Result<Vec<Rational>, NetworkError> {
        let (line, tokens) = self.next_values(what)?;
        if tokens.len() != expected {
            return Err(NetworkError::Parse {
                line,
                message: format!("{what}: expected {expected} values, found {}", tokens.len()),
            });
        }
        tokens
            .iter()
            .map(|t| {
                parse_decimal(t).map_err(|e| NetworkError::Parse {
                    line,
                    message: format!("{what}: {e}"),
                })
            })
            .collect()
    }

    fn integers(&mut self, what: &str, min_len: usize) -> Result<(usize, Vec<usize>), NetworkError> {
        let (line, tokens) = self.next_values(what)?;
        if tokens.len() < min_len {
            return Err(NetworkError::Parse {
                line,
                message: format!("{what}: expected at least {min_len} integers"),
            });
        }
        let vals = tokens
            .iter()
            .map(|t| {
                t.parse::<usize>().map_err(|_| NetworkError::Parse {
                    line,
                    message: format!("{what}: `{t}` is not a non-negative integer"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok((line, vals))
    }
}

/// Parses an NNet document.
pub fn parse_nnet<R: BufRead>(source: R) -> Result<Network, NetworkError> {
    let mut lines = Lines {
        inner: source.lines(),
        line_no: 0,
    };
    let (header_line, header) = lines.integers("header", 4)?;
    let (num_layers, input_size, output_size) = (header[0], header[1], header[2]);
    let (sizes_line, sizes) = lines.integers("layer sizes", num_layers + 1)?;
    if sizes.len() != num_layers + 1 {
        return Err(NetworkError::Parse {
            line: sizes_line,
            message: format!("expected {} layer sizes, found {}", num_layers + 1, sizes.len()),
        });
    }
    if sizes[0] != input_size || sizes[num_layers] != output_size {
        return Err(NetworkError::Parse {
            line: header_line,
            message: "header input/output sizes disagree with layer sizes".into(),
        });
    }
    lines.next_values("legacy flag")?;
    let mins = lines.rationals("input minimums", input_size)?;
    let maxes = lines.rationals("input maximums", input_size)?;
    let means = lines.rationals("means", input_size + 1)?;
    let ranges = lines.rationals("ranges", input_size + 1)?;
    let mut weights = Vec::with_capacity(num_layers);
    let mut biases = Vec::with_capacity(num_layers);
    for k in 0..num_layers {
        let what = format!("layer {} weights", k + 1);
        let rows = (0..sizes[k + 1])
            .map(|_| lines.rationals(&what, sizes[k]))
            .collect::<Result<Vec<_>, _>>()?;
        let what = format!("layer {} biases", k + 1);
        let b = (0..sizes[k + 1])
            .map(|_| lines.rationals(&what, 1).map(|mut v| v.remove(0)))
            .collect::<Result<Vec<_>, _>>()?;
        weights.push(rows);
        biases.push(b);
    }
    Network::new("network", sizes, weights, biases, mins, maxes, means, ranges)
}

impl std::str::FromStr for Network {
    type Err = NetworkError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_nnet(s.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use proptest::prelude::*;

    const SMALL: &str = "\
// tiny test network
2,2,1,2,
2,2,1,
0,
-1,-1,
1,1,
0,0,0,
1,1,1,
1,0,
0,1,
0,
0,
1,-1,
0.5,
";

    #[test]
    fn parses_small_network() {
        let net: Network = SMALL.parse().unwrap();
        assert_eq!(net.layer_sizes(), &[2, 2, 1]);
        assert_eq!(net.hidden_layers(), 1);
        assert_eq!(net.biases(2), &[ratio(1, 2)]);
        // relu(x0) - relu(x1) + 1/2
        let out = net.evaluate_exact(&[int(1), int(-1)]).unwrap();
        assert_eq!(out, vec![ratio(3, 2)]);
        let round_trip: Network = net.to_nnet().parse().unwrap();
        assert_eq!(round_trip.layer_sizes(), net.layer_sizes());
        assert_eq!(round_trip.weights(1), net.weights(1));
    }

    #[test]
    fn rejects_wrong_row_arity() {
        let bad = SMALL.replace("1,0,\n0,1,", "1,0,\n0,1,2,");
        match bad.parse::<Network>() {
            Err(NetworkError::Parse { line, message }) => {
                assert_eq!(line, 10);
                assert!(message.contains("expected 2"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_truncated_and_non_numeric() {
        let truncated: String = SMALL.lines().take(11).collect::<Vec<_>>().join("\n");
        assert!(matches!(truncated.parse::<Network>(), Err(NetworkError::Parse { .. })));
        let garbage = SMALL.replace("0.5,", "half,");
        assert!(matches!(garbage.parse::<Network>(), Err(NetworkError::Parse { line: 14, .. })));
    }

    #[test]
    fn accepts_scientific_notation() {
        let net: Network = SMALL.replace("0.5,", "5e-1,").parse().unwrap();
        assert_eq!(net.biases(2), &[ratio(1, 2)]);
    }

    #[test]
    fn relu_identity_network() {
        let net = Network::from_layers("relu", vec![vec![vec![int(1)]], vec![vec![int(1)]]], vec![vec![int(0)], vec![int(0)]]).unwrap();
        assert_eq!(net.evaluate_exact(&[int(-3)]).unwrap(), vec![int(0)]);
        assert_eq!(net.evaluate_exact(&[int(2)]).unwrap(), vec![int(2)]);
    }

    #[test]
    fn constant_network() {
        let net = Network::from_layers(
            "const",
            vec![vec![vec![int(0), int(0)]; 2], vec![vec![int(0), int(0)]]],
            vec![vec![int(0), int(0)], vec![int(7)]],
        )
        .unwrap();
        assert_eq!(net.evaluate_exact(&[int(5), int(-9)]).unwrap(), vec![int(7)]);
    }

    #[test]
    fn neutral_normalization_is_identity() {
        let net: Network = SMALL.parse().unwrap();
        let p = vec![ratio(1, 3), ratio(-1, 2)];
        assert_eq!(net.normalize_point(&p, Direction::RawToNormalized, ClampPolicy::Reject).unwrap(), p);
    }

    #[test]
    fn clamping_policy() {
        let net: Network = SMALL.parse().unwrap();
        let p = vec![int(3), int(0)];
        let n = net.normalize_point(&p, Direction::RawToNormalized, ClampPolicy::Clamp).unwrap();
        assert_eq!(n, vec![int(1), int(0)]);
        assert!(matches!(
            net.normalize_point(&p, Direction::RawToNormalized, ClampPolicy::Reject),
            Err(NetworkError::OutOfDomain { index: 0, .. })
        ));
        assert!(matches!(
            net.normalize_point(&[int(0)], Direction::RawToNormalized, ClampPolicy::Clamp),
            Err(NetworkError::Dimension { expected: 2, found: 1 })
        ));
    }

    fn scaled_net() -> Network {
        Network::new(
            "scaled",
            vec![2, 1, 1],
            vec![vec![vec![int(1), int(1)]], vec![vec![int(1)]]],
            vec![vec![int(0)], vec![int(0)]],
            vec![int(0), int(-10)],
            vec![int(100), int(10)],
            vec![int(50), int(2), int(0)],
            vec![int(100), ratio(5, 2), int(1)],
        )
        .unwrap()
    }

    #[test]
    fn centering_maps_means_to_zero() {
        let net = scaled_net();
        let n = net
            .normalize_point(&[int(50), int(2)], Direction::RawToNormalized, ClampPolicy::Reject)
            .unwrap();
        assert!(n.iter().all(|v| v.is_zero()));
    }

    proptest! {
        #[test]
        fn normalization_round_trip(a in 0i64..=1000, b in -400i64..=400) {
            let net = scaled_net();
            let raw = vec![ratio(a, 10), ratio(b, 40)];
            let n = net.normalize_point(&raw, Direction::RawToNormalized, ClampPolicy::Reject).unwrap();
            let back = net.normalize_point(&n, Direction::NormalizedToRaw, ClampPolicy::Reject).unwrap();
            prop_assert_eq!(back, raw);
        }

        #[test]
        fn argmin_invariant_under_common_shift(vals in prop::collection::vec(-20i64..20, 5), shift in -50i64..50) {
            let out: Vec<Rational> = vals.iter().map(|v| int(*v)).collect();
            let shifted: Vec<Rational> = out.iter().map(|v| v + int(shift)).collect();
            prop_assert_eq!(select_label(&out, SelectionRule::Argmin), select_label(&shifted, SelectionRule::Argmin));
        }
    }

    #[test]
    fn ties_are_reported() {
        let out = vec![int(1), int(0), int(0)];
        assert_eq!(select_label(&out, SelectionRule::Argmin), LabelChoice::Tie(vec![1, 2]));
        assert_eq!(select_label(&out, SelectionRule::Argmax), LabelChoice::Unique(0));
    }

    #[test]
    fn output_lookup() {
        let net: Network = SMALL.parse().unwrap();
        assert_eq!(net.output_index("y0"), Some(0));
        assert_eq!(net.output_index("0"), Some(0));
        assert_eq!(net.output_index("y1"), None);
    }
}
