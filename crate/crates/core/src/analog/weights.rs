//! Analog step: pattern weights for a fixed digital beamformer.
//!
//! For fixed precoder directions the far field toward `θ_g` is linear in
//! the weights, `f_g = G_g w`, so every power is a quadratic form in `w`.
//! The digital step rescales each precoder block to its power budget, which
//! makes the pattern a sum of ratios `P_b ‖G_g^b w‖² / wᵀ Π_b w`. The
//! relaxation lifts `X = w wᵀ` with one normalization `tr(Π X) = 1`, exact
//! at the incumbent; candidates recovered from `X` are then ranked and
//! polished on the exact ratio objective.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::analog::sdp::{smat, solve_conic, svec, svec_len, ConeBlock, ConicProblem, SolveStatus, SolverSettings};
use crate::analog::simplex::project_to_simplex;
use crate::analog::system::HybridSystem;
use crate::analog::{MismatchReport, OptimizerConfig, TraceEntry};
use crate::digital::DigitalBeamformer;
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, CMatrix, Matrix};
use crate::scalar::{norm_sqr, Real};

/// One precoder block (communication or radar) seen from the weights.
struct Block<T> {
    budget: T,
    /// Per grid point, `C_b x N`.
    fields: Vec<CMatrix<T>>,
    /// Radiated power form.
    pi: Matrix<T>,
}

struct UserForms<T> {
    gamma: T,
    signal: Vec<Complex<T>>,
    /// Other users' streams.
    comm_leak: Vec<Vec<Complex<T>>>,
    radar_leak: Vec<Vec<Complex<T>>>,
}

/// Exact quantities at one weight vector.
#[derive(Clone, Debug)]
struct Eval<T> {
    alpha: T,
    mse: T,
    shortfall: T,
}

/// The analog subproblem at a fixed digital beamformer.
struct AnalogModel<'a, T> {
    blocks: Vec<Block<T>>,
    users: Vec<UserForms<T>>,
    floors: &'a [T],
    desired: &'a [T],
    noise: T,
    n: usize,
    comm_block: Option<usize>,
    radar_block: Option<usize>,
}

fn dot<T: Real>(c: &[Complex<T>], w: &[T]) -> Complex<T> {
    c.iter().zip(w).map(|(z, &x)| *z * x).sum()
}

fn quad<T: Real>(a: &Matrix<T>, w: &[T]) -> T {
    a.matvec(w).iter().zip(w).map(|(x, y)| *x * *y).sum()
}

/// `Re(c̄ cᵀ)`, so that `wᵀ (·) w = |cᵀ w|²`.
fn outer_re<T: Real>(c: &[Complex<T>]) -> Matrix<T> {
    Matrix::from_fn(c.len(), c.len(), |i, j| (c[i].conj() * c[j]).re)
}

impl<'a, T: Real> AnalogModel<'a, T> {
    fn new(system: &'a HybridSystem<T>, v: &DigitalBeamformer<T>, noise: T) -> Self {
        let parts = system.parts();
        let q = parts.reference.matrix();
        let b = system.bank_matrix();
        let (m, n) = b.shape();
        let u = system.user_count();
        let (pc, pr) = match (v.vc.cols(), v.vr.cols()) {
            (_, 0) => (parts.total_power, T::zero()),
            (0, _) => (T::zero(), parts.total_power),
            _ => (
                (T::one() - parts.radar_fraction) * parts.total_power,
                parts.radar_fraction * parts.total_power,
            ),
        };
        let qvc = q.matmul(&v.vc);
        let qvr = q.matmul(&v.vr);
        let steering = system.steering();
        let block = |qv: &CMatrix<T>, budget: T| -> Block<T> {
            let c = qv.cols();
            let fields = (0..steering.rows())
                .map(|g| {
                    let s = steering.row(g);
                    // (C x M) * (M x N)
                    let t = CMatrix::from_fn(c, m, |col, e| s[e] * qv[(e, col)]);
                    t.matmul(&b.map(|x| Complex::new(x, T::zero())))
                })
                .collect();
            let r: Vec<T> = (0..m).map(|e| qv.row(e).iter().map(|z| norm_sqr(*z)).sum()).collect();
            let pi = Matrix::from_fn(n, n, |i, j| (0..m).map(|e| b[(e, i)] * b[(e, j)] * r[e]).sum());
            Block { budget, fields, pi }
        };
        let mut blocks = Vec::new();
        let (mut comm_block, mut radar_block) = (None, None);
        if pc > T::zero() && qvc.cols() > 0 {
            comm_block = Some(blocks.len());
            blocks.push(block(&qvc, pc));
        }
        if pr > T::zero() && qvr.cols() > 0 {
            radar_block = Some(blocks.len());
            blocks.push(block(&qvr, pr));
        }
        let mut users = Vec::with_capacity(u);
        if let Some(h) = system.users() {
            let hm = h.matrix();
            let coeff = |user: usize, qv: &CMatrix<T>, col: usize| -> Vec<Complex<T>> {
                (0..n)
                    .map(|p| (0..m).map(|e| hm[(user, e)] * qv[(e, col)] * b[(e, p)]).sum())
                    .collect()
            };
            for user in 0..u {
                users.push(UserForms {
                    gamma: T::lit(2.0).powf(parts.capacity_floors[user]) - T::one(),
                    signal: coeff(user, &qvc, user),
                    comm_leak: (0..qvc.cols()).filter(|&j| j != user).map(|j| coeff(user, &qvc, j)).collect(),
                    radar_leak: (0..qvr.cols()).map(|j| coeff(user, &qvr, j)).collect(),
                });
            }
        }
        AnalogModel {
            blocks,
            users,
            floors: &parts.capacity_floors,
            desired: parts.grid.desired(),
            noise,
            n,
            comm_block,
            radar_block,
        }
    }

    /// Per-block scale `P_b / wᵀ Π_b w`; `None` if a budgeted block radiates
    /// nothing.
    fn scales(&self, w: &[T]) -> Option<Vec<T>> {
        self.blocks
            .iter()
            .map(|b| {
                let d = quad(&b.pi, w);
                (d > T::zero()).then(|| b.budget / d)
            })
            .collect()
    }

    fn pattern_with(&self, w: &[T], kappa: &[T]) -> Vec<T> {
        let g = self.desired.len();
        (0..g)
            .map(|gi| {
                self.blocks
                    .iter()
                    .zip(kappa)
                    .map(|(b, &k)| k * b.fields[gi].matvec_c(w).iter().map(|z| norm_sqr(*z)).sum::<T>())
                    .sum()
            })
            .collect()
    }

    fn capacities_with(&self, w: &[T], kappa: &[T]) -> Vec<T> {
        let (kc, kr) = self.block_scales(kappa);
        self.users
            .iter()
            .map(|u| {
                let s = kc * norm_sqr(dot(&u.signal, w));
                let ic: T = u.comm_leak.iter().map(|c| norm_sqr(dot(c, w))).sum();
                let ir: T = u.radar_leak.iter().map(|c| norm_sqr(dot(c, w))).sum();
                (T::one() + s / (kc * ic + kr * ir + self.noise)).log2()
            })
            .collect()
    }

    /// `(κ_c, κ_r)`, zero for unbudgeted blocks.
    fn block_scales(&self, kappa: &[T]) -> (T, T) {
        let pick = |b: Option<usize>| b.map_or(T::zero(), |i| kappa[i]);
        (pick(self.comm_block), pick(self.radar_block))
    }

    fn evaluate(&self, w: &[T]) -> Option<Eval<T>> {
        let kappa = self.scales(w)?;
        let p = self.pattern_with(w, &kappa);
        let (alpha, mse) = crate::analog::beampattern::mismatch_error(&p, self.desired).ok()?;
        let caps = self.capacities_with(w, &kappa);
        let shortfall = caps
            .iter()
            .zip(self.floors)
            .fold(T::zero(), |s, (c, f)| s.max(*f - *c));
        Some(Eval { alpha, mse, shortfall })
    }

    /// Gradient of the exact mismatch.
    fn gradient(&self, w: &[T]) -> Option<Vec<T>> {
        let kappa = self.scales(w)?;
        let p = self.pattern_with(w, &kappa);
        let d = self.desired;
        let g = d.len();
        let dd: T = d.iter().map(|x| *x * *x).sum();
        let dp: T = d.iter().zip(&p).map(|(a, b)| *a * *b).sum();
        let alpha = (dp / dd).max(T::zero());
        let resid: Vec<T> = p.iter().zip(d).map(|(pg, dg)| *pg - alpha * *dg).collect();
        let two = T::lit(2.0);
        let scale = two / T::from_usize(g);
        let mut grad = vec![T::zero(); self.n];
        for (b, &k) in self.blocks.iter().zip(&kappa) {
            let den = b.budget / k;
            let mut acc = vec![T::zero(); self.n];
            let mut rn = T::zero();
            for gi in 0..g {
                let f = b.fields[gi].matvec_c(w);
                let nrm: T = f.iter().map(|z| norm_sqr(*z)).sum();
                rn += resid[gi] * nrm;
                // Re(G^H f) scaled by the residual.
                let gh = b.fields[gi].adjoint_matvec(&f);
                for (a, z) in acc.iter_mut().zip(gh) {
                    *a += resid[gi] * z.re;
                }
            }
            let piw = b.pi.matvec(w);
            for i in 0..self.n {
                grad[i] += scale * b.budget * (two * acc[i] / den - rn * two * piw[i] / (den * den));
            }
        }
        Some(grad)
    }

    /// `Re(G^H G)` summed over blocks, scaled to a common budget.
    fn lifted_pattern_forms(&self) -> Vec<Matrix<T>> {
        let g = self.desired.len();
        (0..g)
            .map(|gi| {
                let mut phi = Matrix::zeros(self.n, self.n);
                for b in &self.blocks {
                    let f = &b.fields[gi];
                    for i in 0..self.n {
                        for j in i..self.n {
                            let v: T = (0..f.rows()).map(|c| (f[(c, i)].conj() * f[(c, j)]).re).sum();
                            phi[(i, j)] += v;
                            if i != j {
                                phi[(j, i)] += v;
                            }
                        }
                    }
                }
                phi
            })
            .collect()
    }

    fn total_pi(&self) -> Matrix<T> {
        let mut pi = Matrix::zeros(self.n, self.n);
        for b in &self.blocks {
            for i in 0..self.n {
                for j in 0..self.n {
                    pi[(i, j)] += b.pi[(i, j)];
                }
            }
        }
        pi
    }
}

trait ComplexMatVec<T> {
    fn matvec_c(&self, w: &[T]) -> Vec<Complex<T>>;
    fn adjoint_matvec(&self, f: &[Complex<T>]) -> Vec<Complex<T>>;
}

impl<T: Real> ComplexMatVec<T> for CMatrix<T> {
    fn matvec_c(&self, w: &[T]) -> Vec<Complex<T>> {
        (0..self.rows()).map(|r| dot(self.row(r), w)).collect()
    }

    fn adjoint_matvec(&self, f: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.cols()];
        for (r, fr) in f.iter().enumerate() {
            for (o, z) in out.iter_mut().zip(self.row(r)) {
                *o += z.conj() * *fr;
            }
        }
        out
    }
}

/// Result of one analog step.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalogStep<T = f64> {
    pub weights: Vec<T>,
    pub report: MismatchReport<T>,
    pub solver_iterations: usize,
    pub solver_converged: bool,
}

/// Chooses pattern weights minimizing the beampattern mismatch at fixed
/// precoder directions, subject to the users' capacity floors.
///
/// `w_prev` is the incumbent; it is kept as a candidate together with
/// equal weights, so a feasible incumbent is never worsened.
pub fn optimize_analog_weights<T: Real>(
    system: &HybridSystem<T>,
    v: &DigitalBeamformer<T>,
    w_prev: &[T],
    cfg: &OptimizerConfig<T>,
    iteration: usize,
) -> Result<AnalogStep<T>> {
    cfg.validate()?;
    let n = system.bank().len();
    if w_prev.len() != n {
        return Err(Error::invalid(format!("{} incumbent weights for {n} patterns", w_prev.len())));
    }
    let model = AnalogModel::new(system, v, cfg.noise_power);
    let feasible = |e: &Eval<T>| e.shortfall <= T::lit(1e-9);
    let entry = |e: &Eval<T>| TraceEntry {
        iteration,
        mse: e.mse,
        alpha: e.alpha,
        min_capacity: None,
    };

    let start = model.evaluate(w_prev);
    if n == 1 {
        let w = vec![T::one()];
        let e = model
            .evaluate(&w)
            .ok_or_else(|| Error::DegenerateConfiguration("single pattern radiates nothing".into()))?;
        if !feasible(&e) {
            return Err(Error::Infeasible {
                weights: vec![1.0],
                shortfall: e.shortfall.as_f64(),
            });
        }
        return Ok(AnalogStep {
            weights: w,
            report: MismatchReport {
                alpha: e.alpha,
                mse: e.mse,
                trace: vec![entry(&e)],
            },
            solver_iterations: 0,
            solver_converged: true,
        });
    }

    let (x, solver_iterations, solver_converged) = relax(&model, w_prev, cfg)?;
    let mut candidates = recover_candidates(&x, n, cfg, iteration);
    candidates.push(vec![T::one() / T::from_usize(n); n]);
    candidates.push(project_to_simplex(w_prev));

    // Best feasible by mismatch, else least shortfall.
    let mut best: Option<(Vec<T>, Eval<T>)> = None;
    for w in candidates {
        let Some(e) = model.evaluate(&w) else { continue };
        let better = match &best {
            None => true,
            Some((_, b)) => match (feasible(&e), feasible(b)) {
                (true, false) => true,
                (false, true) => false,
                (true, true) => e.mse < b.mse,
                (false, false) => e.shortfall < b.shortfall,
            },
        };
        if better {
            best = Some((w, e));
        }
    }
    let (w, e) = best.ok_or_else(|| Error::DegenerateConfiguration("no candidate radiates power".into()))?;
    if !feasible(&e) {
        return Err(Error::Infeasible {
            weights: w.iter().map(|x| x.as_f64()).collect(),
            shortfall: e.shortfall.as_f64(),
        });
    }
    let (w, e) = polish(&model, w, e, cfg.polish_iterations);
    let mut trace = Vec::with_capacity(2);
    if let Some(s) = &start {
        trace.push(entry(s));
    }
    trace.push(entry(&e));
    Ok(AnalogStep {
        weights: w,
        report: MismatchReport {
            alpha: e.alpha,
            mse: e.mse,
            trace,
        },
        solver_iterations,
        solver_converged,
    })
}

/// Solves the lifted problem; returns `X` and solver diagnostics.
fn relax<T: Real>(model: &AnalogModel<'_, T>, w_prev: &[T], cfg: &OptimizerConfig<T>) -> Result<(Matrix<T>, usize, bool)> {
    let n = model.n;
    let nv = svec_len(n);
    // Normalization scaled so that the incumbent lifts to trace one.
    let pi = model.total_pi();
    let w0: Vec<T> = project_to_simplex(w_prev);
    let w0_norm2: T = w0.iter().map(|x| *x * *x).sum();
    let pi_w0 = quad(&pi, &w0);
    if !(pi_w0 > T::zero()) {
        return Err(Error::DegenerateConfiguration("incumbent weights radiate no power".into()));
    }
    let pi_hat = pi.scale(w0_norm2 / pi_w0);

    // Objective: (1/G) ‖Π⊥ L x‖², rows of L are svec(Φ_g).
    let forms = model.lifted_pattern_forms();
    let l_rows: Vec<Vec<T>> = forms.iter().map(svec).collect();
    let dd: T = model.desired.iter().map(|x| *x * *x).sum();
    let mut dtl = vec![T::zero(); nv];
    for (row, &dg) in l_rows.iter().zip(model.desired) {
        if dg != T::zero() {
            for (acc, v) in dtl.iter_mut().zip(row) {
                *acc += dg * *v;
            }
        }
    }
    let proj_rows: Vec<Vec<T>> = l_rows
        .iter()
        .zip(model.desired)
        .map(|(row, &dg)| row.iter().zip(&dtl).map(|(v, t)| *v - dg * *t / dd).collect())
        .collect();
    let mut p = Matrix::zeros(nv, nv);
    for row in &proj_rows {
        for i in 0..nv {
            let ri = row[i];
            if ri == T::zero() {
                continue;
            }
            for j in i..nv {
                p[(i, j)] += ri * row[j];
            }
        }
    }
    let mut pmax = T::zero();
    for i in 0..nv {
        pmax = pmax.max(p[(i, i)]);
        for j in 0..i {
            p[(i, j)] = p[(j, i)];
        }
    }
    let p = if pmax > T::zero() {
        p.scale(T::one() / pmax)
    } else {
        p
    };

    // Constraint rows: PSD copy, nonnegative copy, normalization, SINR.
    let mut rows: Vec<Vec<T>> = Vec::new();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let unit = |i: usize| {
        let mut r = vec![T::zero(); nv];
        r[i] = T::one();
        r
    };
    for i in 0..nv {
        rows.push(unit(i));
    }
    for i in 0..nv {
        rows.push(unit(i));
        lower.push(T::zero());
        upper.push(T::infinity());
    }
    let eq = svec(&pi_hat);
    let eq_norm = eq.iter().map(|x| *x * *x).sum::<T>().sqrt();
    rows.push(eq.iter().map(|x| *x / eq_norm).collect());
    lower.push(T::one() / eq_norm);
    upper.push(T::one() / eq_norm);
    let p_tot = model.blocks.iter().map(|b| b.budget).sum::<T>();
    for u in &model.users {
        if u.gamma <= T::zero() {
            continue;
        }
        let mut mu = outer_re(&u.signal).scale(p_tot);
        for c in u.comm_leak.iter().chain(&u.radar_leak) {
            mu = sub(&mu, &outer_re(c).scale(u.gamma * p_tot));
        }
        mu = sub(&mu, &pi.scale(u.gamma * model.noise));
        let r = svec(&mu);
        let nr = r.iter().map(|x| *x * *x).sum::<T>().sqrt();
        if nr > T::zero() {
            rows.push(r.iter().map(|x| *x / nr).collect());
            lower.push(T::zero());
            upper.push(T::infinity());
        }
    }
    let a = Matrix::from_row_major(rows.len(), nv, rows.into_iter().flatten().collect());
    let problem = ConicProblem {
        p,
        q: vec![T::zero(); nv],
        a,
        cones: vec![ConeBlock::Psd { dim: n }, ConeBlock::Box { lower, upper }],
    };
    let settings = SolverSettings {
        tolerance: cfg.sdr_solver_tolerance,
        max_iterations: cfg.max_solver_iterations,
    };
    let sol = solve_conic(&problem, &settings)?;
    if sol.status == SolveStatus::Infeasible {
        // Floors unreachable even relaxed; recovery falls back to the incumbent.
        let x0 = Matrix::from_fn(n, n, |i, j| w0[i] * w0[j] / w0_norm2);
        return Ok((x0, sol.iterations, false));
    }
    Ok((smat(&sol.z[..nv], n), sol.iterations, sol.status == SolveStatus::Solved))
}

fn sub<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    Matrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)] - b[(i, j)])
}

/// Maps a real direction onto the simplex: sign fix, scale by the sum of
/// positive parts, Euclidean projection.
fn to_simplex<T: Real>(xi: &[T]) -> Option<Vec<T>> {
    let s: T = xi.iter().copied().sum();
    let sign = if s < T::zero() { -T::one() } else { T::one() };
    let pos: T = xi.iter().map(|x| (*x * sign).max(T::zero())).sum();
    if !(pos > T::zero()) || !pos.is_finite() {
        return None;
    }
    Some(project_to_simplex(&xi.iter().map(|x| *x * sign / pos).collect::<Vec<_>>()))
}

/// Dominant eigenvector, diagonal root and Gaussian draws `ξ ~ N(0, X)`.
fn recover_candidates<T: Real>(x: &Matrix<T>, n: usize, cfg: &OptimizerConfig<T>, iteration: usize) -> Vec<Vec<T>> {
    let (vals, vecs) = symmetric_eigen(x);
    let mut out = Vec::with_capacity(cfg.randomization_count + 2);
    let lead: Vec<T> = (0..n).map(|i| vecs[(i, 0)]).collect();
    out.extend(to_simplex(&lead));
    let diag: Vec<T> = (0..n).map(|i| x[(i, i)].max(T::zero()).sqrt()).collect();
    out.extend(to_simplex(&diag));
    let roots: Vec<T> = vals.iter().map(|l| l.max(T::zero()).sqrt()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (iteration as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    for _ in 0..cfg.randomization_count {
        let z: Vec<T> = (0..n)
            .map(|_| {
                let s: f64 = StandardNormal.sample(&mut rng);
                T::lit(s)
            })
            .collect();
        let xi: Vec<T> = (0..n)
            .map(|i| (0..n).map(|k| vecs[(i, k)] * roots[k] * z[k]).sum())
            .collect();
        out.extend(to_simplex(&xi));
    }
    out
}

/// Projected gradient with backtracking on the exact mismatch; every
/// accepted step stays feasible.
fn polish<T: Real>(model: &AnalogModel<'_, T>, mut w: Vec<T>, mut e: Eval<T>, iterations: usize) -> (Vec<T>, Eval<T>) {
    let feasible = |e: &Eval<T>| e.shortfall <= T::lit(1e-9);
    let mut step = T::zero();
    for _ in 0..iterations {
        let Some(g) = model.gradient(&w) else { break };
        let gmax = g.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        if !(gmax > T::zero()) || !gmax.is_finite() {
            break;
        }
        if step == T::zero() {
            step = T::lit(0.1) / gmax;
        }
        let mut accepted = false;
        for _ in 0..40 {
            let cand = project_to_simplex(&w.iter().zip(&g).map(|(x, d)| *x - step * *d).collect::<Vec<_>>());
            let moved: T = cand.iter().zip(&w).map(|(a, b)| (*a - *b) * (*a - *b)).sum();
            if moved == T::zero() {
                break;
            }
            if let Some(ce) = model.evaluate(&cand) {
                if feasible(&ce) && ce.mse <= e.mse - T::lit(1e-4) * moved / step {
                    w = cand;
                    e = ce;
                    accepted = true;
                    break;
                }
            }
            step = step * T::lit(0.5);
        }
        if !accepted {
            break;
        }
        step = step * T::lit(2.0);
    }
    (w, e)
}
