//! Stability certificates: matrix measures, Lyapunov solves, the frozen-state
//! Lyapunov and Krasovskii inequalities, the matrix-measure phase condition and
//! the spectrum of the linearized follower error dynamics.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::integrate::{integrate_single, Trajectory};
use crate::linalg::{eigenvalues, is_positive_definite, max_symmetric_eigenvalue, Lu, Matrix};
use crate::network::NetworkState;
use crate::scalar::Real;
use crate::systems::SystemSpec;
use crate::topology::DirectedGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MeasureNorm {
    #[serde(rename = "1")]
    One,
    #[default]
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "inf")]
    Inf,
}

impl std::str::FromStr for MeasureNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "one" => Ok(Self::One),
            "2" | "two" => Ok(Self::Two),
            "inf" | "infinity" => Ok(Self::Inf),
            other => invalid(format!("unknown matrix norm '{other}', expected 1, 2 or inf")),
        }
    }
}

/// Logarithmic norm of `a` induced by the chosen vector norm.
pub fn matrix_measure<T: Real>(a: &Matrix<T>, p: MeasureNorm) -> Result<T> {
    if !a.is_square() {
        return invalid(format!(
            "matrix measure needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        ));
    }
    let n = a.rows();
    if n == 0 {
        return invalid("matrix measure of an empty matrix");
    }
    Ok(match p {
        MeasureNorm::One => (0..n)
            .map(|j| a[(j, j)] + (0..n).filter(|&i| i != j).map(|i| a[(i, j)].abs()).sum::<T>())
            .fold(T::neg_infinity(), T::max),
        MeasureNorm::Inf => (0..n)
            .map(|i| a[(i, i)] + (0..n).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum::<T>())
            .fold(T::neg_infinity(), T::max),
        MeasureNorm::Two => max_symmetric_eigenvalue(&a.symmetric_part())?,
    })
}

/// Solves `AᵀP + PA = −Q` for symmetric `P`.
pub fn solve_lyapunov<T: Real>(a: &Matrix<T>, q: &Matrix<T>) -> Result<Matrix<T>> {
    if !a.is_square() || !q.is_square() || a.rows() != q.rows() {
        return invalid(format!(
            "Lyapunov solve needs square A and Q of equal size, got {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            q.rows(),
            q.cols()
        ));
    }
    let n = a.rows();
    let m = n * n;
    // Row (i, j) of AᵀP + PA = Σ_k a_ki p_kj + Σ_k p_ik a_kj.
    let mut op = Matrix::zeros(m, m);
    for i in 0..n {
        for j in 0..n {
            let r = i * n + j;
            for k in 0..n {
                op[(r, k * n + j)] += a[(k, i)];
                op[(r, i * n + k)] += a[(k, j)];
            }
        }
    }
    let rhs: Vec<T> = q.as_slice().iter().map(|&v| -v).collect();
    let lu = Lu::new(&op)
        .map_err(|_| Error::NoSolution("Lyapunov operator is singular (two eigenvalues of A sum to zero)".into()))?;
    let mut p = lu.solve(&rhs);
    for _ in 0..3 {
        let ap = op.mul_vec(&p);
        let r: Vec<T> = rhs.iter().zip(&ap).map(|(&b, &v)| b - v).collect();
        let d = lu.solve(&r);
        for (pi, di) in p.iter_mut().zip(d) {
            *pi += di;
        }
    }
    let p = Matrix::from_vec(n, n, p)?.symmetric_part();
    if !p.is_finite() {
        return Err(Error::NoSolution("Lyapunov solution is not finite".into()));
    }
    Ok(p)
}

/// `‖AᵀP + PA + Q‖_F`.
pub fn lyapunov_residual<T: Real>(a: &Matrix<T>, p: &Matrix<T>, q: &Matrix<T>) -> T {
    let at = a.transpose();
    let mut r = &(&at * p) + &(p * a);
    r.add_scaled(T::one(), q);
    r.frobenius_norm()
}

/// Worst-case value of a certificate over a sample set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Check<T> {
    pub margin: T,
    pub verdict: bool,
}

fn require_samples<T: Real>(spec: &SystemSpec<T>, states: &[Vec<T>]) -> Result<()> {
    if states.is_empty() {
        return invalid("certificate needs at least one sample state");
    }
    if let Some(s) = states.iter().find(|s| s.len() != spec.dim()) {
        return invalid(format!(
            "sample state has dimension {}, system has {}",
            s.len(),
            spec.dim()
        ));
    }
    Ok(())
}

/// `L + (1−α)·J_G(x)`.
pub fn frozen_error_matrix<T: Real>(spec: &SystemSpec<T>, alpha: T, x: &[T]) -> Result<Matrix<T>> {
    let mut a = spec.linear_part().clone();
    a.add_scaled(T::one() - alpha, &spec.jacobian_nonlinear(x)?);
    Ok(a)
}

/// Matrix-measure phase condition: `μ_p(L) + (1−α)·μ_p(J_G(x)) < 0` over all
/// samples.
pub fn theorem2_check<T: Real>(spec: &SystemSpec<T>, alpha: T, p: MeasureNorm, states: &[Vec<T>]) -> Result<Check<T>> {
    require_samples(spec, states)?;
    let mu_l = matrix_measure(spec.linear_part(), p)?;
    let w = T::one() - alpha;
    let mut margin = T::neg_infinity();
    for x in states {
        let v = if w == T::zero() {
            mu_l
        } else {
            mu_l + w * matrix_measure(&spec.jacobian_nonlinear(x)?, p)?
        };
        margin = margin.max(v);
    }
    Ok(Check {
        margin,
        verdict: margin < T::zero(),
    })
}

fn require_pd<T: Real>(m: &Matrix<T>, name: &str) -> Result<()> {
    if !is_positive_definite(m) {
        return invalid(format!("{name} must be symmetric positive definite"));
    }
    Ok(())
}

fn worst_lmi<T: Real>(
    spec: &SystemSpec<T>,
    alpha: T,
    p: &Matrix<T>,
    shift: &Matrix<T>,
    states: &[Vec<T>],
) -> Result<T> {
    let mut margin = T::neg_infinity();
    for x in states {
        let a = frozen_error_matrix(spec, alpha, x)?;
        let pa = p * &a;
        let mut s = &pa.transpose() + &pa;
        s.add_scaled(T::one(), shift);
        margin = margin.max(max_symmetric_eigenvalue(&s.symmetric_part())?);
    }
    Ok(margin)
}

/// Frozen-state Lyapunov inequality `AᵀP + PA ≤ −Q` with `A = L + (1−α)J_G(x)`.
pub fn eq9_check<T: Real>(
    spec: &SystemSpec<T>,
    alpha: T,
    p: &Matrix<T>,
    q: &Matrix<T>,
    states: &[Vec<T>],
) -> Result<Check<T>> {
    require_samples(spec, states)?;
    require_pd(p, "P")?;
    require_pd(q, "Q")?;
    let margin = worst_lmi(spec, alpha, p, q, states)?;
    Ok(Check {
        margin,
        verdict: margin <= T::zero(),
    })
}

/// Delay-robust inequality `AᵀP + PA + τR < 0` with `A = L + (1−α)J_G(x)`.
pub fn krasovskii_check<T: Real>(
    spec: &SystemSpec<T>,
    alpha: T,
    p: &Matrix<T>,
    r: &Matrix<T>,
    tau: T,
    states: &[Vec<T>],
) -> Result<Check<T>> {
    require_samples(spec, states)?;
    require_pd(p, "P")?;
    require_pd(r, "R")?;
    if !(tau >= T::zero()) {
        return invalid(format!("delay must be nonnegative, got {tau}"));
    }
    let margin = worst_lmi(spec, alpha, p, &r.scale(tau), states)?;
    Ok(Check {
        margin,
        verdict: margin < T::zero(),
    })
}

/// Which linearization of the follower error dynamics to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearizationForm {
    /// Jacobian of the simulated coupled field with respect to the follower
    /// states: diagonal weight `1 − α·d_i`.
    #[default]
    Exact,
    /// Error-frame form with diagonal weight `(1−α) − α·d_i`; see
    /// [`reduced_error_field`].
    Reduced,
}

/// Jacobian of the stacked follower error dynamics, `(N−1)·n` square.
///
/// Block `(i, i)` is `L + w_i·J_G(x_i)` and block `(i, j)` is
/// `α·a_ij·J_G(x_j)` for follower neighbors `j`. The leader's column drops out
/// because its error is identically zero.
pub fn extended_jacobian<T: Real>(
    spec: &SystemSpec<T>,
    graph: &DirectedGraph<T>,
    alpha: T,
    x: &NetworkState<T>,
    form: LinearizationForm,
) -> Result<Matrix<T>> {
    let n = spec.dim();
    let agents = graph.num_agents();
    if x.num_agents() != agents || x.dim() != n {
        return invalid(format!(
            "state is {} agents x {}, expected {} x {}",
            x.num_agents(),
            x.dim(),
            agents,
            n
        ));
    }
    let followers = agents - 1;
    let jacobians: Vec<Matrix<T>> = (0..agents)
        .map(|i| {
            let mut j = Matrix::zeros(n, n);
            spec.jacobian_into(x.agent(i), &mut j);
            j
        })
        .collect();
    let mut out = Matrix::zeros(followers * n, followers * n);
    for i in 1..agents {
        let d = graph.in_degree(i);
        let w = match form {
            LinearizationForm::Exact => T::one() - alpha * d,
            LinearizationForm::Reduced => T::one() - alpha - alpha * d,
        };
        let mut diag = spec.linear_part().clone();
        diag.add_scaled(w, &jacobians[i]);
        out.set_block((i - 1) * n, (i - 1) * n, &diag);
        for j in 1..agents {
            let a = graph.weight(i, j);
            if a != T::zero() {
                out.set_block((i - 1) * n, (j - 1) * n, &jacobians[j].scale(alpha * a));
            }
        }
    }
    Ok(out)
}

/// Error-frame dynamics whose Jacobian is the [`LinearizationForm::Reduced`]
/// matrix. With `e_i = x_i − x_leader` and `e_leader = 0`:
/// `ė_i = L e_i + (1−α)(G(x_L+e_i) − G(x_L)) + α Σ_j a_ij (G(x_L+e_j) − G(x_L+e_i))`.
pub fn reduced_error_field<T: Real>(
    spec: &SystemSpec<T>,
    graph: &DirectedGraph<T>,
    alpha: T,
    leader: &[T],
    errors: &[T],
) -> Result<Vec<T>> {
    let n = spec.dim();
    let agents = graph.num_agents();
    if leader.len() != n || errors.len() != (agents - 1) * n {
        return invalid("reduced error field: dimension mismatch");
    }
    let g_leader = spec.eval_nonlinear(leader)?;
    let mut g_agent = vec![g_leader.clone()];
    for i in 1..agents {
        let xi: Vec<T> = leader
            .iter()
            .zip(&errors[(i - 1) * n..i * n])
            .map(|(&a, &b)| a + b)
            .collect();
        g_agent.push(spec.eval_nonlinear(&xi)?);
    }
    let l = spec.linear_part();
    let mut out = vec![T::zero(); (agents - 1) * n];
    for i in 1..agents {
        let e = &errors[(i - 1) * n..i * n];
        let le = l.mul_vec(e);
        let o = &mut out[(i - 1) * n..i * n];
        for c in 0..n {
            let mut v = le[c] + (T::one() - alpha) * (g_agent[i][c] - g_leader[c]);
            for j in 0..agents {
                let a = graph.weight(i, j);
                if a != T::zero() {
                    v += alpha * a * (g_agent[j][c] - g_agent[i][c]);
                }
            }
            o[c] = v;
        }
    }
    Ok(out)
}

pub use crate::linalg::spectral_abscissa;

/// How attractor samples are drawn from the uncoupled leader.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttractorSampling {
    pub transient: f64,
    pub duration: f64,
    pub samples: usize,
    pub dt: f64,
    pub initial: [f64; 3],
}

impl Default for AttractorSampling {
    fn default() -> Self {
        Self {
            transient: 20.0,
            duration: 100.0,
            samples: 500,
            dt: 1e-3,
            initial: [1.0, 1.0, 1.0],
        }
    }
}

/// Integrates the leader alone and returns evenly spaced states after the
/// transient.
pub fn sample_attractor<T: Real>(spec: &SystemSpec<T>, opts: &AttractorSampling) -> Result<Vec<Vec<T>>> {
    if opts.samples == 0 || !(opts.dt > 0.0) || !(opts.duration > 0.0) || !(opts.transient >= 0.0) {
        return invalid("attractor sampling needs positive samples, step and duration");
    }
    let n = spec.dim();
    let mut x: Vec<T> = (0..n)
        .map(|i| T::lit(opts.initial.get(i).copied().unwrap_or(1.0)))
        .collect();
    let dt = T::lit(opts.dt);
    let transient_steps = (opts.transient / opts.dt).round() as usize;
    x = integrate_single(spec, &x, dt, transient_steps).map_err(Error::from)?;
    let total = (opts.duration / opts.dt).round() as usize;
    let stride = (total / opts.samples).max(1);
    let mut out = Vec::with_capacity(opts.samples);
    while out.len() < opts.samples {
        x = integrate_single(spec, &x, dt, stride).map_err(Error::from)?;
        out.push(x.clone());
    }
    Ok(out)
}

/// Knobs for [`certify`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateOptions {
    pub norm: MeasureNorm,
    /// `Q = q_scale·I` in the Lyapunov inequality.
    pub q_scale: f64,
    /// `R = r_scale·I` in the Krasovskii inequality.
    pub r_scale: f64,
    /// Number of samples at which the extended Jacobian spectrum is evaluated.
    pub spectral_samples: usize,
    pub linearization: LinearizationForm,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        Self {
            norm: MeasureNorm::Two,
            q_scale: 1e-6,
            r_scale: 1.0,
            spectral_samples: 100,
            linearization: LinearizationForm::Exact,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Verdicts {
    pub theorem2: bool,
    pub eq9: bool,
    pub krasovskii: bool,
    pub spectral: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LyapunovSource {
    /// Solved at the mean sample state.
    Centroid,
    /// Centroid solve failed or was indefinite.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub theorem2_margin: f64,
    pub eq9_margin: f64,
    pub krasovskii_margin: f64,
    /// Worst max Re λ of the extended Jacobian over synchronized sample states.
    pub spectral_abscissa: f64,
    pub samples_used: usize,
    pub spectral_samples_used: usize,
    pub verdicts: Verdicts,
    pub norm: MeasureNorm,
    pub alpha: f64,
    pub delay: f64,
    pub linearization: LinearizationForm,
    pub lyapunov_p: LyapunovSource,
    /// Eigenvalues of `L` as `[re, im]`.
    pub linear_spectrum: Vec<[f64; 2]>,
}

impl CertificateReport {
    /// True if any certificate claims stability.
    pub fn claims_stability(&self) -> bool {
        self.verdicts.theorem2 || self.verdicts.eq9 || self.verdicts.krasovskii || self.verdicts.spectral
    }

    /// True if every margin is nonnegative, i.e. nothing certifies the run.
    pub fn all_margins_nonnegative(&self) -> bool {
        self.theorem2_margin >= 0.0
            && self.eq9_margin >= 0.0
            && self.krasovskii_margin >= 0.0
            && self.spectral_abscissa >= 0.0
    }
}

fn centroid<T: Real>(states: &[Vec<T>]) -> Vec<T> {
    let n = states[0].len();
    let k = T::from_usize_lossy(states.len());
    (0..n).map(|c| states.iter().map(|s| s[c]).sum::<T>() / k).collect()
}

/// `P` from a Lyapunov solve at the sample centroid, or the identity if that
/// fails or is not positive definite.
pub fn choose_lyapunov_p<T: Real>(
    spec: &SystemSpec<T>,
    alpha: T,
    q: &Matrix<T>,
    states: &[Vec<T>],
) -> Result<(Matrix<T>, LyapunovSource)> {
    require_samples(spec, states)?;
    let a = frozen_error_matrix(spec, alpha, &centroid(states))?;
    if let Ok(p) = solve_lyapunov(&a, q) {
        if is_positive_definite(&p) {
            return Ok((p, LyapunovSource::Centroid));
        }
    }
    Ok((Matrix::identity(spec.dim()), LyapunovSource::Identity))
}

/// Worst spectral abscissa of the extended Jacobian over states where every
/// agent sits at the same sample point.
pub fn synchronized_spectral_abscissa<T: Real>(
    spec: &SystemSpec<T>,
    graph: &DirectedGraph<T>,
    alpha: T,
    states: &[Vec<T>],
    max_samples: usize,
    form: LinearizationForm,
) -> Result<(T, usize)> {
    require_samples(spec, states)?;
    let stride = states.len().div_ceil(max_samples.max(1));
    let mut worst = T::neg_infinity();
    let mut used = 0;
    for x in states.iter().step_by(stride) {
        let net = NetworkState::synchronized(T::zero(), graph.num_agents(), x);
        let j = extended_jacobian(spec, graph, alpha, &net, form)?;
        worst = worst.max(spectral_abscissa(&j)?);
        used += 1;
    }
    Ok((worst, used))
}

/// Spectral abscissa of the extended Jacobian at every `stride`-th sample of a
/// simulated trajectory, as `(t, abscissa)` pairs.
pub fn spectral_abscissa_along<T: Real>(
    spec: &SystemSpec<T>,
    graph: &DirectedGraph<T>,
    alpha: T,
    traj: &Trajectory<T>,
    stride: usize,
    form: LinearizationForm,
) -> Result<Vec<(T, T)>> {
    let mut out = Vec::new();
    for k in (0..traj.len()).step_by(stride.max(1)) {
        let j = extended_jacobian(spec, graph, alpha, &traj.network_state(k), form)?;
        out.push((traj.time(k), spectral_abscissa(&j)?));
    }
    Ok(out)
}

/// Full extended Jacobian spectrum at one network state.
pub fn extended_spectrum<T: Real>(
    spec: &SystemSpec<T>,
    graph: &DirectedGraph<T>,
    alpha: T,
    x: &NetworkState<T>,
    form: LinearizationForm,
) -> Result<Vec<Complex<T>>> {
    eigenvalues(&extended_jacobian(spec, graph, alpha, x, form)?)
}

/// Evaluates every certificate on the given sample states.
pub fn certify<T: Real>(
    spec: &SystemSpec<T>,
    graph: &DirectedGraph<T>,
    alpha: T,
    delay: T,
    states: &[Vec<T>],
    opts: &CertificateOptions,
) -> Result<CertificateReport> {
    require_samples(spec, states)?;
    if !(opts.q_scale > 0.0) || !(opts.r_scale > 0.0) {
        return invalid("Q and R scales must be positive");
    }
    let n = spec.dim();
    let q = Matrix::<T>::identity(n).scale(T::lit(opts.q_scale));
    let r = Matrix::<T>::identity(n).scale(T::lit(opts.r_scale));
    let t2 = theorem2_check(spec, alpha, opts.norm, states)?;
    let (p, source) = choose_lyapunov_p(spec, alpha, &q, states)?;
    let e9 = eq9_check(spec, alpha, &p, &q, states)?;
    let kr = krasovskii_check(spec, alpha, &p, &r, delay, states)?;
    let (sa, used) =
        synchronized_spectral_abscissa(spec, graph, alpha, states, opts.spectral_samples, opts.linearization)?;
    Ok(CertificateReport {
        theorem2_margin: t2.margin.as_f64(),
        eq9_margin: e9.margin.as_f64(),
        krasovskii_margin: kr.margin.as_f64(),
        spectral_abscissa: sa.as_f64(),
        samples_used: states.len(),
        spectral_samples_used: used,
        verdicts: Verdicts {
            theorem2: t2.verdict,
            eq9: e9.verdict,
            krasovskii: kr.verdict,
            spectral: sa < T::zero(),
        },
        norm: opts.norm,
        alpha: alpha.as_f64(),
        delay: delay.as_f64(),
        linearization: opts.linearization,
        lyapunov_p: source,
        linear_spectrum: spec
            .linear_spectrum()
            .iter()
            .map(|z| [z.re.as_f64(), z.im.as_f64()])
            .collect(),
    })
}
