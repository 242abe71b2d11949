//! Fully connected Hamiltonians in factorized channel form, and the
//! all-to-all quadratic fermion model.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::KeyValueFile;
use crate::error::{Error, Result};
use crate::linalg::{self, apply_local_add, re, CMat, C64, ONE, ZERO};
use crate::operator::LinearOperator;

/// Default cap on dense assembly, in basis states.
pub const DEFAULT_DENSE_LIMIT: usize = 1 << 14;

const HERMITIAN_TOL: f64 = 1e-12;

pub fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMat {
    let i = C64::new(0.0, 1.0);
    CMat::from_row_slice(2, 2, &[ZERO, -i, i, ZERO])
}

/// `diag(1, -1)`: index 0 is spin up.
pub fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// One interaction channel `J * sum over l-tuples of prod h_i`.
#[derive(Debug, Clone)]
pub struct Channel {
    pub coupling: f64,
    /// One operator per site, indexed by site.
    pub ops: Vec<CMat>,
    /// Number of distinct sites in each product (2 or 3).
    pub body: usize,
    /// Sum over ordered tuples instead of `i < j (< l)`; multiplies the term by `body!`.
    pub ordered: bool,
}

impl Channel {
    pub fn new(coupling: f64, ops: Vec<CMat>, body: usize) -> Self {
        Self { coupling, ops, body, ordered: false }
    }

    /// Factor in front of each unordered product, including `1/n^(l-1)`.
    pub fn prefactor(&self, norm_n: usize) -> f64 {
        let mult = if self.ordered { factorial(self.body) } else { 1.0 };
        mult * self.coupling / (norm_n as f64).powi(self.body as i32 - 1)
    }
}

fn factorial(l: usize) -> f64 {
    (1..=l).map(|v| v as f64).product()
}

#[derive(Debug, Clone)]
struct Powers {
    sq: Vec<CMat>,
    cube: Vec<CMat>,
}

#[derive(Debug, Clone)]
pub struct FullyConnectedHamiltonian {
    n: usize,
    d: usize,
    k: usize,
    norm_n: usize,
    onsite: Vec<CMat>,
    channels: Vec<Channel>,
    powers: Vec<Powers>,
    g0: f64,
    g1: f64,
    dense_limit: usize,
}

impl FullyConnectedHamiltonian {
    /// Validate and record constants. The `1/n^(l-1)` prefactor uses the site count.
    pub fn new(d: usize, onsite: Vec<CMat>, channels: Vec<Channel>) -> Result<Self> {
        let n = onsite.len();
        Self::with_norm(d, onsite, channels, n)
    }

    /// As `new`, but prefactors refer to a system of `norm_n` sites.
    pub fn with_norm(d: usize, onsite: Vec<CMat>, channels: Vec<Channel>, norm_n: usize) -> Result<Self> {
        let n = onsite.len();
        if n == 0 {
            return Err(Error::InvalidModel("no sites".into()));
        }
        if d < 2 {
            return Err(Error::InvalidArgument(format!("local dimension {d} < 2")));
        }
        for (i, v) in onsite.iter().enumerate() {
            check_hermitian(v, d, &format!("on-site operator {i}"))?;
        }
        for (s, ch) in channels.iter().enumerate() {
            if !(2..=3).contains(&ch.body) {
                return Err(Error::InvalidModel(format!("channel {s}: body count {} not in {{2, 3}}", ch.body)));
            }
            if ch.ops.len() != n {
                return Err(Error::InvalidModel(format!("channel {s}: {} operators for {n} sites", ch.ops.len())));
            }
            if !ch.coupling.is_finite() {
                return Err(Error::InvalidModel(format!("channel {s}: non-finite coupling")));
            }
            for (i, h) in ch.ops.iter().enumerate() {
                check_hermitian(h, d, &format!("channel {s} site {i}"))?;
                let nrm = linalg::hermitian_norm(h);
                if nrm > 1.0 + HERMITIAN_TOL {
                    return Err(Error::InvalidModel(format!("channel {s} site {i}: norm {nrm} exceeds 1")));
                }
            }
        }
        let g0 = onsite.iter().map(linalg::hermitian_norm).fold(0.0, f64::max);
        // ordered sums count every unordered product body! times
        let g1 = channels
            .iter()
            .map(|c| c.coupling.abs() * if c.ordered { factorial(c.body) } else { 1.0 })
            .sum();
        let k = channels.iter().map(|c| c.body).max().unwrap_or(2);
        let powers = channels
            .iter()
            .map(|c| Powers {
                sq: c.ops.iter().map(|h| h * h).collect(),
                cube: c.ops.iter().map(|h| h * h * h).collect(),
            })
            .collect();
        Ok(Self { n, d, k, norm_n, onsite, channels, powers, g0, g1, dense_limit: DEFAULT_DENSE_LIMIT })
    }

    pub fn with_dense_limit(mut self, limit: usize) -> Self {
        self.dense_limit = limit;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn k(&self) -> usize {
        self.k
    }
    /// System size used in the `1/n^(l-1)` prefactors.
    pub fn norm_n(&self) -> usize {
        self.norm_n
    }
    pub fn onsite(&self) -> &[CMat] {
        &self.onsite
    }
    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }
    pub fn dims(&self) -> Vec<usize> {
        vec![self.d; self.n]
    }
    pub fn hilbert_dim(&self) -> usize {
        self.d.pow(self.n as u32)
    }
    pub fn dense_limit(&self) -> usize {
        self.dense_limit
    }
    pub fn g0(&self) -> f64 {
        self.g0
    }
    pub fn g1(&self) -> f64 {
        self.g1
    }
    pub fn gbar1(&self) -> f64 {
        self.g0 + self.g1
    }

    pub fn extensiveness_constants(&self) -> (f64, f64, f64) {
        (self.g0, self.g1, self.gbar1())
    }

    pub fn matvec(&self, v: &[C64]) -> Result<Vec<C64>> {
        let dim = self.hilbert_dim();
        if v.len() != dim {
            return Err(Error::InvalidArgument(format!("vector length {} != Hilbert dimension {dim}", v.len())));
        }
        let mut out = vec![ZERO; dim];
        self.apply(v, &mut out);
        Ok(out)
    }

    pub fn assemble_dense(&self) -> Result<CMat> {
        let dim = self.hilbert_dim();
        if self.n > 40 || dim > self.dense_limit {
            return Err(Error::ResourceLimit(format!(
                "dense assembly of {}^{} states exceeds limit {}",
                self.d, self.n, self.dense_limit
            )));
        }
        Ok(self.to_dense())
    }

    /// Terms supported entirely inside `sites`, as a Hamiltonian on those
    /// sites (in the given order) keeping the original prefactors.
    pub fn subset_hamiltonian(&self, sites: &[usize]) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidArgument("empty site list".into()));
        }
        check_sites(sites, self.n)?;
        let onsite = sites.iter().map(|&i| self.onsite[i].clone()).collect();
        let channels = self
            .channels
            .iter()
            .map(|c| Channel {
                coupling: c.coupling,
                ops: sites.iter().map(|&i| c.ops[i].clone()).collect(),
                body: c.body,
                ordered: c.ordered,
            })
            .collect();
        Ok(Self::with_norm(self.d, onsite, channels, self.norm_n)?.with_dense_limit(self.dense_limit))
    }

    /// Factorized terms coupling disjoint regions `a` and `b`.
    pub fn boundary_interaction(&self, a: &[usize], b: &[usize]) -> Result<Vec<BoundaryChannel>> {
        check_sites(a, self.n)?;
        check_sites(b, self.n)?;
        if a.iter().any(|i| b.contains(i)) {
            return Err(Error::InvalidArgument("regions overlap".into()));
        }
        if a.is_empty() || b.is_empty() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for (s, ch) in self.channels.iter().enumerate() {
            let pre = ch.prefactor(self.norm_n);
            for a_order in 1..ch.body {
                out.push(BoundaryChannel {
                    channel: s,
                    coupling: ch.coupling,
                    prefactor: pre,
                    a_order,
                    b_order: ch.body - a_order,
                });
            }
        }
        Ok(out)
    }

    /// Apply `sum_c prefactor e_a(h on A) e_b(h on B)` for boundary channels.
    pub fn apply_boundary(&self, terms: &[BoundaryChannel], a: &[usize], b: &[usize], x: &[C64]) -> Vec<C64> {
        let dims = self.dims();
        let mut out = vec![ZERO; x.len()];
        for t in terms {
            let ch = &self.channels[t.channel];
            let p = &self.powers[t.channel];
            let ops = ChannelOps { ops: &ch.ops, sq: &p.sq, cube: &p.cube };
            let left = apply_elementary(&ops, b, t.b_order, &dims, x);
            let both = apply_elementary(&ops, a, t.a_order, &dims, &left);
            linalg::axpy(re(t.prefactor), &both, &mut out);
        }
        out
    }

    /// Dense form of a region Hamiltonian restricted to terms touching both regions.
    pub fn boundary_dense(&self, terms: &[BoundaryChannel], a: &[usize], b: &[usize]) -> CMat {
        let dim = self.hilbert_dim();
        let mut m = CMat::zeros(dim, dim);
        let mut e = vec![ZERO; dim];
        for j in 0..dim {
            e[j] = ONE;
            let col = self.apply_boundary(terms, a, b, &e);
            for i in 0..dim {
                m[(i, j)] = col[i];
            }
            e[j] = ZERO;
        }
        m
    }
}

/// One factorized boundary term `prefactor * e_a(h_A) (x) e_b(h_B)`, where
/// `e_m` is the m-th elementary symmetric sum of a channel's site operators.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryChannel {
    pub channel: usize,
    pub coupling: f64,
    pub prefactor: f64,
    pub a_order: usize,
    pub b_order: usize,
}

struct ChannelOps<'a> {
    ops: &'a [CMat],
    sq: &'a [CMat],
    cube: &'a [CMat],
}

fn power_sum(ops: &[CMat], sites: &[usize], dims: &[usize], x: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; x.len()];
    for &i in sites {
        apply_local_add(&ops[i], i, dims, x, &mut out, ONE);
    }
    out
}

/// Elementary symmetric sum of commuting site operators via Newton's identities.
fn apply_elementary(c: &ChannelOps<'_>, sites: &[usize], order: usize, dims: &[usize], x: &[C64]) -> Vec<C64> {
    match order {
        0 => x.to_vec(),
        1 => power_sum(c.ops, sites, dims, x),
        2 => {
            let p1 = power_sum(c.ops, sites, dims, x);
            let mut out = power_sum(c.ops, sites, dims, &p1);
            let p2 = power_sum(c.sq, sites, dims, x);
            for (o, q) in out.iter_mut().zip(&p2) {
                *o = (*o - q) * 0.5;
            }
            out
        }
        3 => {
            let p1 = power_sum(c.ops, sites, dims, x);
            let p11 = power_sum(c.ops, sites, dims, &p1);
            let p111 = power_sum(c.ops, sites, dims, &p11);
            let p2 = power_sum(c.sq, sites, dims, x);
            let p12 = power_sum(c.ops, sites, dims, &p2);
            let p3 = power_sum(c.cube, sites, dims, x);
            p111.iter()
                .zip(&p12)
                .zip(&p3)
                .map(|((a, b), c)| (a - b * 3.0 + c * 2.0) / 6.0)
                .collect()
        }
        _ => unreachable!("body counts are validated to 2 or 3"),
    }
}

impl LinearOperator for FullyConnectedHamiltonian {
    fn dim(&self) -> usize {
        self.hilbert_dim()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let dims = self.dims();
        y.iter_mut().for_each(|v| *v = ZERO);
        for (i, v) in self.onsite.iter().enumerate() {
            apply_local_add(v, i, &dims, x, y, ONE);
        }
        let all: Vec<usize> = (0..self.n).collect();
        for (ch, p) in self.channels.iter().zip(&self.powers) {
            let ops = ChannelOps { ops: &ch.ops, sq: &p.sq, cube: &p.cube };
            let term = apply_elementary(&ops, &all, ch.body, &dims, x);
            linalg::axpy(re(ch.prefactor(self.norm_n)), &term, y);
        }
    }

    fn prefers_dense(&self) -> bool {
        self.hilbert_dim() <= 1024
    }
}

fn check_hermitian(m: &CMat, d: usize, what: &str) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::InvalidModel(format!("{what}: shape {}x{} != {d}x{d}", m.nrows(), m.ncols())));
    }
    let defect = crate::operator::hermiticity_defect(m);
    if defect > HERMITIAN_TOL {
        return Err(Error::InvalidModel(format!("{what}: not Hermitian (defect {defect:.3e})")));
    }
    Ok(())
}

fn check_sites(sites: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for &i in sites {
        if i >= n {
            return Err(Error::InvalidArgument(format!("site {i} outside 0..{n}")));
        }
        if seen[i] {
            return Err(Error::InvalidArgument(format!("site {i} listed twice")));
        }
        seen[i] = true;
    }
    Ok(())
}

/// `H = -(1/n) sum_{i<j} (X_i X_j + gamma Y_i Y_j) - h sum_i Z_i`.
pub fn build_lmg(n: usize, gamma: f64, h: f64) -> Result<FullyConnectedHamiltonian> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("LMG needs n >= 2, got {n}")));
    }
    let onsite = vec![pauli_z() * re(-h); n];
    let channels = vec![
        Channel::new(-1.0, vec![pauli_x(); n], 2),
        Channel::new(-gamma, vec![pauli_y(); n], 2),
    ];
    FullyConnectedHamiltonian::new(2, onsite, channels)
}

/// Random fully connected instance with a uniform on-site field of strength
/// `3 g1` on top of weak random on-site terms.
pub fn build_random_gapped(n: usize, d: usize, k: usize, seed: u64, channel_count: usize) -> Result<FullyConnectedHamiltonian> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("local dimension {d} < 2")));
    }
    if !(2..=3).contains(&k) {
        return Err(Error::InvalidArgument(format!("locality {k} not in {{2, 3}}")));
    }
    if n < k {
        return Err(Error::InvalidArgument(format!("{n} sites cannot host {k}-body terms")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut channels = Vec::with_capacity(channel_count);
    for s in 0..channel_count {
        let coupling = rng.random_range(-1.0..1.0);
        // the first channel carries the full locality, later ones alternate
        let body = k - (s % (k - 1));
        let ops = (0..n).map(|_| linalg::random_hermitian(d, &mut rng)).collect();
        channels.push(Channel::new(coupling, ops, body));
    }
    let g1: f64 = channels.iter().map(|c| c.coupling.abs()).sum();
    let field = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        d,
        (0..d).map(|j| re(-1.0 + 2.0 * j as f64 / (d - 1) as f64)),
    ));
    let onsite = (0..n)
        .map(|_| &field * re(3.0 * g1) + linalg::random_hermitian(d, &mut rng) * re(0.5))
        .collect();
    FullyConnectedHamiltonian::new(d, onsite, channels)
}

/// Spinless fermions with all-to-all hopping `-t_ij/n`, pairing
/// `(kappa/n)(c_i† c_j† + c_j c_i)` for `i < j`, and chemical potential `mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct FermionModel {
    pub n: usize,
    pub t: DMatrix<f64>,
    pub kappa: f64,
    pub mu: f64,
    pub seed: Option<u64>,
}

impl FermionModel {
    pub fn new(t: DMatrix<f64>, kappa: f64, mu: f64) -> Result<Self> {
        let n = t.nrows();
        if t.ncols() != n {
            return Err(Error::InvalidArgument("hopping matrix is not square".into()));
        }
        if n < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 modes, got {n}")));
        }
        for i in 0..n {
            if t[(i, i)] != 0.0 {
                return Err(Error::InvalidArgument(format!("nonzero diagonal hopping at {i}")));
            }
            for j in 0..i {
                if (t[(i, j)] - t[(j, i)]).abs() > 1e-14 {
                    return Err(Error::InvalidArgument(format!("hopping not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { n, t, kappa, mu, seed: None })
    }

    /// Hopping `t_ij ~ U[0, 1)` for `i < j`, drawn in row order and symmetrized.
    pub fn random(n: usize, kappa: f64, mu: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let v: f64 = rng.random();
                t[(i, j)] = v;
                t[(j, i)] = v;
            }
        }
        let mut m = Self::new(t, kappa, mu)?;
        m.seed = Some(seed);
        Ok(m)
    }

    pub fn zero_hopping(n: usize, kappa: f64, mu: f64) -> Result<Self> {
        Self::new(DMatrix::zeros(n, n), kappa, mu)
    }

    /// Single-particle matrix `h` in `sum_ij h_ij c_i† c_j`.
    pub fn single_particle(&self) -> DMatrix<f64> {
        let n = self.n as f64;
        DMatrix::from_fn(self.n, self.n, |i, j| if i == j { -self.mu } else { -2.0 * self.t[(i, j)] / n })
    }

    /// Pairing amplitude for `c_i† c_j†` with `i < j`.
    pub fn pairing(&self) -> f64 {
        self.kappa / self.n as f64
    }
}

/// A split of `n` sites into a region and its complement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bipartition {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

impl Bipartition {
    pub fn new(n: usize, region: &[usize]) -> Result<Self> {
        check_sites(region, n)?;
        let mut a = region.to_vec();
        a.sort_unstable();
        let b = (0..n).filter(|i| !a.contains(i)).collect();
        Ok(Self { a, b })
    }

    /// First half `0..n/2` against the rest.
    pub fn half(n: usize) -> Self {
        Self { a: (0..n / 2).collect(), b: (n / 2..n).collect() }
    }

    pub fn n(&self) -> usize {
        self.a.len() + self.b.len()
    }

    pub fn dims(&self, local: &[usize]) -> (usize, usize) {
        (self.a.iter().map(|&i| local[i]).product(), self.b.iter().map(|&i| local[i]).product())
    }
}

/// A model described by a `[model]` section.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Lmg { n: usize, gamma: f64, h: f64 },
    Fermion { n: usize, kappa: f64, mu: f64, seed: u64 },
    Random { n: usize, d: usize, k: usize, seed: u64, channels: usize },
}

impl ModelSpec {
    /// Read `[model]` keys. Keys not meaningful for the chosen kind are rejected.
    pub fn from_file(file: &KeyValueFile) -> Result<Self> {
        let kind: String = file.require("model.kind")?;
        let allowed: &[&str] = match kind.as_str() {
            "lmg" => &["kind", "n", "gamma", "h"],
            "fermion" => &["kind", "n", "kappa", "mu", "seed"],
            "random" => &["kind", "n", "d", "k", "seed", "channels"],
            other => {
                let line = file.raw("model.kind").map_or(0, |e| e.line);
                return Err(Error::Parse { line, message: format!("unknown model kind `{other}`") });
            }
        };
        file.reject_unknown(|key| match key.strip_prefix("model.") {
            Some(rest) => allowed.contains(&rest),
            None => true,
        })?;
        let n = file.require("model.n")?;
        Ok(match kind.as_str() {
            "lmg" => ModelSpec::Lmg { n, gamma: file.require("model.gamma")?, h: file.require("model.h")? },
            "fermion" => ModelSpec::Fermion {
                n,
                kappa: file.require("model.kappa")?,
                mu: file.require("model.mu")?,
                seed: file.get_or("model.seed", 0)?,
            },
            _ => ModelSpec::Random {
                n,
                d: file.get_or("model.d", 2)?,
                k: file.get_or("model.k", 2)?,
                seed: file.get_or("model.seed", 0)?,
                channels: file.get_or("model.channels", 2)?,
            },
        })
    }

    /// Spin Hamiltonian for the `lmg` and `random` kinds.
    pub fn spin_hamiltonian(&self) -> Result<FullyConnectedHamiltonian> {
        match *self {
            ModelSpec::Lmg { n, gamma, h } => build_lmg(n, gamma, h),
            ModelSpec::Random { n, d, k, seed, channels } => build_random_gapped(n, d, k, seed, channels),
            ModelSpec::Fermion { .. } => Err(Error::InvalidArgument("fermion model has no spin Hamiltonian".into())),
        }
    }
}
