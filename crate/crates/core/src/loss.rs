//! Relative information loss: dimension-ratio formulas, exact losses of
//! discrete systems, cascade composition, transfer graphs, and the partial
//! entropies that witness an unbounded absolute loss.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::dist::{dyadic_piece_probability, dyadic_tail_mass};
use crate::error::{Error, Result};
use crate::quant::DimensionEstimate;

/// How firmly a loss value is established. Ordered from strongest to
/// weakest; combining values keeps the weakest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Proved,
    Conjectured,
    Estimated,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Proved => "proved",
            Status::Conjectured => "conjectured",
            Status::Estimated => "estimated",
        })
    }
}

/// A relative information loss in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossValue {
    pub value: f64,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stderr: Option<f64>,
}

impl LossValue {
    pub fn new(value: f64, status: Status) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::LossOutOfRange(value));
        }
        Ok(LossValue {
            value,
            status,
            stderr: None,
        })
    }

    pub fn proved(value: f64) -> Result<Self> {
        Self::new(value, Status::Proved)
    }

    pub fn from_ratio(r: Ratio<u64>, status: Status) -> Result<Self> {
        Self::new(ratio_to_f64(r), status)
    }

    pub fn with_stderr(mut self, stderr: f64) -> Self {
        self.stderr = Some(stderr);
        self
    }

    /// Relative information transfer `1 - l`.
    pub fn transfer(&self) -> f64 {
        1.0 - self.value
    }
}

pub(crate) fn ratio_to_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

// ---------------------------------------------------------------------------
// Dimension formulas
// ---------------------------------------------------------------------------

/// `l = d(X|Y) / d(X)`.
pub fn loss_from_dims(d_x: f64, d_x_given_y: f64) -> Result<LossValue> {
    if d_x.is_nan() || d_x <= 0.0 || d_x_given_y.is_nan() || d_x_given_y < 0.0 || d_x_given_y > d_x
    {
        return Err(Error::InvalidArgument(format!(
            "need d(X) > 0 and 0 <= d(X|Y) <= d(X), got {d_x} and {d_x_given_y}"
        )));
    }
    LossValue::proved(d_x_given_y / d_x)
}

/// `l = 1 - d(Y) / d(X)` for analytically known dimensions.
pub fn loss_from_output_dim(d_x: f64, d_y: f64) -> Result<LossValue> {
    if d_x.is_nan() || d_x <= 0.0 || d_y.is_nan() || d_y < 0.0 || d_y > d_x {
        return Err(Error::InvalidArgument(format!(
            "need d(X) > 0 and 0 <= d(Y) <= d(X), got {d_x} and {d_y}"
        )));
    }
    LossValue::proved(1.0 - d_y / d_x)
}

/// `l = 1 - d(Y) / d(X)` from two estimates, with a first-order (delta
/// method) standard error.
///
/// An estimated `d(Y)` may exceed `d(X)` by up to twice the combined
/// standard error; the loss is then reported as 0. Beyond that the
/// estimates contradict a deterministic map and the call fails.
pub fn loss_from_estimates(d_x: &DimensionEstimate, d_y: &DimensionEstimate) -> Result<LossValue> {
    let (x, y) = (d_x.value, d_y.value);
    let (sx, sy) = (d_x.slope_stderr, d_y.slope_stderr);
    if x.is_nan() || x <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "estimated d(X) = {x} is not positive"
        )));
    }
    let stderr = ((sy / x).powi(2) + (y * sx / (x * x)).powi(2)).sqrt();
    let combined = (sx * sx + sy * sy).sqrt();
    if y > x + 2.0 * combined + 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "estimated d(Y) = {y:.4} exceeds estimated d(X) = {x:.4} beyond noise"
        )));
    }
    Ok(LossValue::new((1.0 - y / x).clamp(0.0, 1.0), Status::Estimated)?.with_stderr(stderr))
}

// ---------------------------------------------------------------------------
// Cascades
// ---------------------------------------------------------------------------

/// Whether the variables in a cascade are discrete (where the composition
/// law is a theorem) or continuous (where it is only conjectured).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Discrete,
    Continuous,
}

/// Loss of `X -> Z` from the losses of `X -> Y` and `Y -> Z`:
/// `l1 + l2 - l1 l2`.
pub fn cascade_compose(l1: LossValue, l2: LossValue, domain: Domain) -> Result<LossValue> {
    let value = l1.value + l2.value - l1.value * l2.value;
    let mut status = l1.status.max(l2.status);
    if domain == Domain::Continuous {
        status = status.max(Status::Conjectured);
    }
    let mut out = LossValue::new(value.clamp(0.0, 1.0), status)?;
    if l1.stderr.is_some() || l2.stderr.is_some() {
        let s1 = l1.stderr.unwrap_or(0.0) * (1.0 - l2.value);
        let s2 = l2.stderr.unwrap_or(0.0) * (1.0 - l1.value);
        out.stderr = Some((s1 * s1 + s2 * s2).sqrt());
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Discrete systems
// ---------------------------------------------------------------------------

/// Shannon entropy in bits of a probability vector.
pub fn entropy_bits(pmf: &[f64]) -> f64 {
    pmf.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

/// Law of `g(X)` as probabilities ordered by output key.
fn pushforward<T, K, F>(support: &[T], pmf: &[f64], g: F) -> Vec<f64>
where
    K: Ord,
    F: Fn(&T) -> K,
{
    let mut out: BTreeMap<K, f64> = BTreeMap::new();
    for (x, &p) in support.iter().zip(pmf) {
        *out.entry(g(x)).or_insert(0.0) += p;
    }
    out.into_values().collect()
}

fn check_discrete<T>(support: &[T], pmf: &[f64]) -> Result<()> {
    if support.len() != pmf.len() || support.is_empty() {
        return Err(Error::InvalidArgument(
            "need one probability per support point".into(),
        ));
    }
    if pmf.iter().any(|p| !(p.is_finite() && *p >= 0.0))
        || (pmf.iter().sum::<f64>() - 1.0).abs() > 1e-12
    {
        return Err(Error::InvalidArgument(
            "pmf must be non-negative and sum to 1".into(),
        ));
    }
    Ok(())
}

/// Exact `H(X|Z)/H(X)` for `Z = g(X)` on a finite support, using
/// `H(X|Z) = H(X) - H(Z)`.
pub fn discrete_relative_loss<T, K, F>(support: &[T], pmf: &[f64], g: F) -> Result<LossValue>
where
    K: Ord,
    F: Fn(&T) -> K,
{
    check_discrete(support, pmf)?;
    let hx = entropy_bits(pmf);
    if hx <= 0.0 {
        return Err(Error::ZeroEntropy("input X"));
    }
    let hz = entropy_bits(&pushforward(support, pmf, g));
    LossValue::proved(((hx - hz) / hx).clamp(0.0, 1.0))
}

/// Relative transfers of the cascade `X -> Y = g(X) -> Z = h(Y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferProduct {
    pub t_xz: f64,
    pub t_xy: f64,
    pub t_yz: f64,
    /// `|t_xz - t_xy t_yz|`.
    pub product_gap: f64,
}

/// Compute `t(X->Z)`, `t(X->Y)`, `t(Y->Z)` exactly and the gap in the
/// product identity `t(X->Z) = t(X->Y) t(Y->Z)`.
pub fn discrete_transfer_product_check<T, K, L, G, H>(
    support: &[T],
    pmf: &[f64],
    g: G,
    h: H,
) -> Result<TransferProduct>
where
    K: Ord,
    L: Ord,
    G: Fn(&T) -> K,
    H: Fn(&K) -> L,
{
    check_discrete(support, pmf)?;
    let hx = entropy_bits(pmf);
    if hx <= 0.0 {
        return Err(Error::ZeroEntropy("input X"));
    }
    let mut y_law: BTreeMap<K, f64> = BTreeMap::new();
    for (x, &p) in support.iter().zip(pmf) {
        *y_law.entry(g(x)).or_insert(0.0) += p;
    }
    let hy = entropy_bits(&y_law.values().copied().collect::<Vec<_>>());
    if hy <= 0.0 {
        return Err(Error::ZeroEntropy("intermediate Y"));
    }
    let mut z_law: BTreeMap<L, f64> = BTreeMap::new();
    for (y, p) in &y_law {
        *z_law.entry(h(y)).or_insert(0.0) += p;
    }
    let hz = entropy_bits(&z_law.values().copied().collect::<Vec<_>>());

    let t_xz = hz / hx;
    let t_xy = hy / hx;
    let t_yz = hz / hy;
    Ok(TransferProduct {
        t_xz,
        t_xy,
        t_yz,
        product_gap: (t_xz - t_xy * t_yz).abs(),
    })
}

// ---------------------------------------------------------------------------
// Transfer graphs
// ---------------------------------------------------------------------------

/// A signal in a transfer graph, with its information dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalNode {
    pub name: String,
    pub info_dim: u64,
}

/// A processing arrow. `transfer` is `t(source -> to)` measured from the
/// graph's source signal. `stage` is `t(from -> to)`, present only when `to`
/// is a deterministic function of `from` alone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferEdge {
    pub from: String,
    pub to: String,
    pub transfer: Ratio<u64>,
    pub stage: Option<Ratio<u64>>,
    pub annotation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferGraph {
    pub source: String,
    pub nodes: Vec<SignalNode>,
    pub edges: Vec<TransferEdge>,
}

impl TransferGraph {
    fn new(source: &str, nodes: &[(&str, u64)]) -> Self {
        TransferGraph {
            source: source.to_string(),
            nodes: nodes
                .iter()
                .map(|&(name, info_dim)| SignalNode {
                    name: name.to_string(),
                    info_dim,
                })
                .collect(),
            edges: Vec::new(),
        }
    }

    fn node(&self, name: &str) -> Option<&SignalNode> {
        self.nodes.iter().find(|n| n.name == name)
    }

    /// `t(source -> name) = d(name) / d(source)`.
    pub fn transfer_to(&self, name: &str) -> Option<Ratio<u64>> {
        let src = self.node(&self.source)?.info_dim;
        Some(Ratio::new(self.node(name)?.info_dim, src))
    }

    fn connect(&mut self, from: &str, to: &str, composable: bool, annotation: &str) {
        let transfer = self.transfer_to(to).expect("node exists");
        let stage = composable.then(|| transfer / self.transfer_to(from).expect("node exists"));
        self.edges.push(TransferEdge {
            from: from.to_string(),
            to: to.to_string(),
            transfer,
            stage,
            annotation: annotation.to_string(),
        });
    }

    pub fn edge(&self, from: &str, to: &str) -> Option<&TransferEdge> {
        self.edges.iter().find(|e| e.from == from && e.to == to)
    }

    /// Product of stage transfers along `path`, or `None` if some hop is
    /// missing or not composable.
    pub fn path_transfer(&self, path: &[&str]) -> Option<Ratio<u64>> {
        path.windows(2)
            .map(|w| self.edge(w[0], w[1]).and_then(|e| e.stage))
            .try_fold(Ratio::from_integer(1), |acc, s| s.map(|s| acc * s))
    }

    /// Every composable path from the source, as node-name lists.
    pub fn composable_paths(&self) -> Vec<Vec<String>> {
        let mut out = Vec::new();
        let mut stack = vec![vec![self.source.clone()]];
        while let Some(path) = stack.pop() {
            let last = path.last().expect("non-empty").clone();
            for e in self
                .edges
                .iter()
                .filter(|e| e.from == last && e.stage.is_some())
            {
                let mut next = path.clone();
                next.push(e.to.clone());
                out.push(next.clone());
                stack.push(next);
            }
        }
        out
    }

    /// Check that every transfer lies in [0, 1] and that along every
    /// composable path the product of stage transfers equals the transfer
    /// to the endpoint.
    pub fn validate(&self) -> Result<()> {
        let one = Ratio::from_integer(1);
        for e in &self.edges {
            if e.transfer > one || e.stage.is_some_and(|s| s > one) {
                return Err(Error::InvalidArgument(format!(
                    "transfer on {} -> {} exceeds 1",
                    e.from, e.to
                )));
            }
        }
        for path in self.composable_paths() {
            let names: Vec<&str> = path.iter().map(String::as_str).collect();
            let end = names.last().expect("non-empty");
            if self.path_transfer(&names) != self.transfer_to(end) {
                return Err(Error::InvalidArgument(format!(
                    "path {} breaks the product rule",
                    path.join(" -> ")
                )));
            }
        }
        Ok(())
    }
}

/// Node names of the sample-covariance PCA graph.
pub mod pca_nodes {
    pub const DATA: &str = "X";
    pub const COVARIANCE: &str = "C";
    pub const EIGENVALUES: &str = "Sigma";
    pub const ROTATION: &str = "W";
    pub const OUTPUT: &str = "Y";
    pub const SPHERED: &str = "Y_sphered";
}

/// Information flow through PCA with the sample covariance of `n` samples
/// in `N` dimensions (`n >= N >= 2`).
///
/// Node dimensions: data `nN`, covariance `N(N+1)/2`, eigenvalues `N`,
/// rotation `N(N-1)/2`, rotated output `nN - N(N-1)/2`, sphered output
/// `nN - N(N+1)/2`.
pub fn pca_transfer_graph(dims: u64, samples: u64) -> Result<TransferGraph> {
    use pca_nodes::*;
    if dims < 2 || samples < dims {
        return Err(Error::InvalidArgument(format!(
            "need n >= N >= 2, got N = {dims}, n = {samples}"
        )));
    }
    let (big_n, n) = (dims, samples);
    let data = n * big_n;
    let rotation = big_n * (big_n - 1) / 2;
    let mut g = TransferGraph::new(
        DATA,
        &[
            (DATA, data),
            (COVARIANCE, big_n * (big_n + 1) / 2),
            (EIGENVALUES, big_n),
            (ROTATION, rotation),
            (OUTPUT, data - rotation),
            (SPHERED, data - rotation - big_n),
        ],
    );
    g.connect(DATA, COVARIANCE, true, "sample covariance (1/n) X Xᵀ");
    g.connect(COVARIANCE, EIGENVALUES, true, "EVD: eigenvalues");
    g.connect(COVARIANCE, ROTATION, true, "EVD: eigenvectors");
    g.connect(DATA, OUTPUT, true, "rotation Wᵀ X");
    g.connect(
        ROTATION,
        OUTPUT,
        false,
        "rotation matrix fed to the rotation stage",
    );
    g.connect(OUTPUT, SPHERED, true, "sphering Σ^{-1/2} Y");
    g.connect(
        EIGENVALUES,
        SPHERED,
        false,
        "eigenvalues fed to the sphering stage",
    );
    g.validate()?;
    Ok(g)
}

/// The bookkeeping identities of the PCA transfer graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PcaBudget {
    /// `t(X->Y) + t(X->W)`; the rotation removes what the rotation matrix holds.
    pub output_plus_rotation: Ratio<u64>,
    /// `t(X->Sigma) + t(X->W)`; must equal `covariance`.
    pub eigen_split: Ratio<u64>,
    pub covariance: Ratio<u64>,
    /// `t(X -> Y, Sigma, W)`.
    pub joint: Ratio<u64>,
    /// `t(X->Sigma) + t(X->W) + t(X->Y)`, which over-counts by `1/n`.
    pub separate_sum: Ratio<u64>,
}

pub fn pca_budget(g: &TransferGraph) -> Option<PcaBudget> {
    use pca_nodes::*;
    let y = g.transfer_to(OUTPUT)?;
    let w = g.transfer_to(ROTATION)?;
    let s = g.transfer_to(EIGENVALUES)?;
    // Sigma is the sample covariance of Y, a function of Y, so the triple
    // carries what (Y, W) carries; X = W Y recovers the data from that pair.
    let src = g.node(&g.source)?.info_dim;
    let joint_dim = g.node(OUTPUT)?.info_dim + g.node(ROTATION)?.info_dim;
    Some(PcaBudget {
        output_plus_rotation: y + w,
        eigen_split: s + w,
        covariance: g.transfer_to(COVARIANCE)?,
        joint: Ratio::new(joint_dim.min(src), src),
        separate_sum: s + w + y,
    })
}

// ---------------------------------------------------------------------------
// Absolute loss witness
// ---------------------------------------------------------------------------

/// Lower bound on the entropy of the dyadic piece index: the exact terms for
/// pieces `1..=K` plus the tail mass `1/log2(K+2)` folded into one atom.
///
/// Splitting an atom never lowers entropy, so the bound is non-decreasing in
/// `K`; it grows without limit.
pub fn dyadic_absolute_loss_partial(k: u64) -> f64 {
    assert!(k >= 1, "K must be at least 1");
    let mut sum = 0.0;
    let mut comp = 0.0;
    for n in 1..=k {
        let p = dyadic_piece_probability(n);
        let term = -p * p.log2();
        // Neumaier summation
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    let r = dyadic_tail_mass(k);
    sum + comp - r * r.log2()
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticPart {
    pub value: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatedPart {
    pub value: Option<f64>,
    pub stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

/// Analytic vs. estimated loss of one block on one input law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub block: String,
    pub spec: serde_json::Value,
    pub analytic: AnalyticPart,
    pub estimated: EstimatedPart,
    pub d_x: DimensionEstimate,
    pub d_y: DimensionEstimate,
    pub pass: bool,
    pub tolerance: f64,
    pub pieces: Vec<crate::blocks::PieceProbability>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub meta: Option<serde_json::Value>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn dimension_ratio_examples() {
        assert_eq!(loss_from_dims(2.0, 1.0).unwrap().value, 0.5);
        assert_eq!(loss_from_dims(3.7, 0.0).unwrap().value, 0.0);
        // nN = 25, N(N-1)/2 = 10
        assert_eq!(loss_from_dims(25.0, 10.0).unwrap().value, 0.4);
        assert!(loss_from_dims(0.0, 0.0).is_err());
        assert!(loss_from_dims(1.0, 2.0).is_err());

        assert_eq!(loss_from_output_dim(2.0, 1.0).unwrap().value, 0.5);
        assert_eq!(loss_from_output_dim(3.0, 3.0).unwrap().value, 0.0);
        assert_eq!(loss_from_output_dim(1.0, 0.0).unwrap().value, 1.0);
        assert!(loss_from_output_dim(1.0, 1.5).is_err());
    }

    #[test]
    fn cascade_examples() {
        let third = LossValue::proved(1.0 / 3.0).unwrap();
        let half = LossValue::proved(0.5).unwrap();
        let c = cascade_compose(third, half, Domain::Continuous).unwrap();
        assert_eq!(c.value, 2.0 / 3.0);
        assert_eq!(c.status, Status::Conjectured);
        let d = cascade_compose(third, half, Domain::Discrete).unwrap();
        assert_eq!(d.status, Status::Proved);

        let zero = LossValue::proved(0.0).unwrap();
        let x = LossValue::proved(0.37).unwrap();
        assert_eq!(
            cascade_compose(zero, x, Domain::Discrete).unwrap().value,
            0.37
        );
        let one = LossValue::proved(1.0).unwrap();
        assert_eq!(
            cascade_compose(one, x, Domain::Discrete).unwrap().value,
            1.0
        );

        let est = LossValue::new(0.2, Status::Estimated)
            .unwrap()
            .with_stderr(0.01);
        let e = cascade_compose(est, half, Domain::Discrete).unwrap();
        assert_eq!(e.status, Status::Estimated);
        assert_abs_diff_eq!(e.stderr.unwrap(), 0.005, epsilon = 1e-15);
    }

    #[test]
    fn loss_value_range() {
        assert!(LossValue::proved(-0.01).is_err());
        assert!(LossValue::proved(1.01).is_err());
        assert!(LossValue::proved(f64::NAN).is_err());
    }

    #[test]
    fn discrete_loss_examples() {
        let support: Vec<u32> = (0..4).collect();
        let pmf = [0.25; 4];
        assert_eq!(
            discrete_relative_loss(&support, &pmf, |x| x / 2)
                .unwrap()
                .value,
            0.5
        );
        assert_eq!(
            discrete_relative_loss(&support, &pmf, |x| x * 7 + 1)
                .unwrap()
                .value,
            0.0
        );
        assert_eq!(
            discrete_relative_loss(&support, &pmf, |_| 0).unwrap().value,
            1.0
        );
        assert!(matches!(
            discrete_relative_loss(&[1u32], &[1.0], |x| *x),
            Err(Error::ZeroEntropy(_))
        ));
    }

    #[test]
    fn transfer_product_example() {
        let support: Vec<u32> = (0..8).collect();
        let pmf = [0.125; 8];
        let t = discrete_transfer_product_check(&support, &pmf, |x| x / 2, |y| y / 2).unwrap();
        assert_abs_diff_eq!(t.t_xy, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.t_yz, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(t.t_xz, 1.0 / 3.0, epsilon = 1e-15);
        assert!(t.product_gap < 1e-15);

        let bij = discrete_transfer_product_check(&support, &pmf, |x| 7 - x, |y| y % 3).unwrap();
        assert_eq!(bij.t_xy, 1.0);
        let bij2 = discrete_transfer_product_check(&support, &pmf, |x| x / 4, |y| y + 10).unwrap();
        assert_eq!(bij2.t_yz, 1.0);
        assert!(matches!(
            discrete_transfer_product_check(&support, &pmf, |_| 0u8, |y| *y),
            Err(Error::ZeroEntropy("intermediate Y"))
        ));
    }

    #[test]
    fn transfer_graph_n2_n10() {
        use pca_nodes::*;
        let g = pca_transfer_graph(2, 10).unwrap();
        let t = |name| g.transfer_to(name).unwrap();
        assert_eq!(t(COVARIANCE), Ratio::new(3, 20));
        assert_eq!(t(EIGENVALUES), Ratio::new(1, 10));
        assert_eq!(t(ROTATION), Ratio::new(1, 20));
        assert_eq!(t(OUTPUT), Ratio::new(19, 20));
        assert_eq!(t(SPHERED), Ratio::new(17, 20));
        let b = pca_budget(&g).unwrap();
        assert_eq!(b.output_plus_rotation, Ratio::from_integer(1));
        assert_eq!(b.eigen_split, b.covariance);
        assert_eq!(b.joint, Ratio::from_integer(1));
        assert_eq!(b.separate_sum, Ratio::new(11, 10));
        assert_eq!(
            g.path_transfer(&[DATA, COVARIANCE, EIGENVALUES]),
            Some(Ratio::new(1, 10))
        );
        assert_eq!(g.path_transfer(&[ROTATION, OUTPUT]), None);
        assert!(pca_transfer_graph(3, 2).is_err());
        assert!(pca_transfer_graph(1, 5).is_err());
    }

    #[test]
    fn dyadic_partial_first_term() {
        // two-atom law {p1, 1 - p1}, p1 = 1 - 1/log2(3)
        let p1: f64 = 1.0 - 1.0 / 3f64.log2();
        let r1 = 1.0 - p1;
        let oracle = -p1 * p1.log2() - r1 * r1.log2();
        assert_abs_diff_eq!(dyadic_absolute_loss_partial(1), oracle, epsilon = 1e-14);
        assert_abs_diff_eq!(
            dyadic_absolute_loss_partial(1),
            0.949_955_527_188_33,
            epsilon = 1e-12
        );
        let mut prev = dyadic_absolute_loss_partial(1);
        for k in 2..200 {
            let h = dyadic_absolute_loss_partial(k);
            assert!(h > prev, "not increasing at K = {k}");
            prev = h;
        }
    }
}
