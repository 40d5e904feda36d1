use crate::analog::system::{HybridSystem, PairEvaluation};
use crate::analog::weights::optimize_analog_weights;
use crate::analog::{MismatchReport, OptimizerConfig, TraceEntry};
use crate::digital::DigitalBeamformer;
use crate::error::{Error, Result};
use crate::holography::{superpose, AnalogBeamformer};
use crate::metrics::LinkMetrics;
use crate::scalar::Real;

/// Why the alternating loop ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// Mismatch decrease fell below `ε`.
    Converged,
    /// The latest candidate pair was rejected; the incumbent is returned.
    Stalled,
    MaxIterations,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlternatingOutcome<T = f64> {
    pub digital: DigitalBeamformer<T>,
    pub analog: AnalogBeamformer<T>,
    pub report: MismatchReport<T>,
    /// Analog steps executed, including a rejected final one.
    pub iterations: usize,
    pub stop: StopReason,
    pub pattern: Vec<T>,
    pub link: Option<LinkMetrics<T>>,
}

fn at(iteration: usize) -> impl Fn(Error) -> Error {
    move |e| Error::AtIteration {
        iteration,
        source: Box::new(e),
    }
}

fn entry<T: Real>(iteration: usize, e: &PairEvaluation<T>) -> TraceEntry<T> {
    TraceEntry {
        iteration,
        mse: e.mse,
        alpha: e.alpha,
        min_capacity: e.link.as_ref().map(LinkMetrics::min_capacity),
    }
}

/// Alternates the digital step (ZF, null space, power split) with the
/// analog step, starting from equal pattern weights.
///
/// Each iteration's trace value is the mismatch of the consistent pair
/// `(a, V(a))`. A new pair is kept only if it does not raise the mismatch
/// by more than the solver tolerance and keeps every capacity floor met;
/// otherwise the loop stops at the incumbent.
pub fn alternating_optimize<T: Real>(system: &HybridSystem<T>, cfg: &OptimizerConfig<T>) -> Result<AlternatingOutcome<T>> {
    cfg.validate()?;
    let bank = system.bank();
    let noise = cfg.noise_power;
    let mut analog = superpose(bank, &bank.equal_weights())?;
    let mut digital = system.digital_step(&analog.amplitudes).map_err(at(0))?;
    let mut eval = system.evaluate(&analog.amplitudes, &digital, noise).map_err(at(0))?;
    let mut trace = vec![entry(0, &eval)];
    let mut iterations = 0;
    let mut stop = StopReason::MaxIterations;
    let mut last_error = None;

    for it in 1..=cfg.max_iterations {
        iterations = it;
        let step = match optimize_analog_weights(system, &digital, &analog.weights, cfg, it) {
            Ok(s) => s,
            Err(e @ Error::Infeasible { .. }) => {
                last_error = Some(at(it)(e));
                stop = StopReason::Stalled;
                break;
            }
            Err(e) => return Err(at(it)(e)),
        };
        let cand = superpose(bank, &step.weights).map_err(at(it))?;
        let cand_digital = match system.digital_step(&cand.amplitudes) {
            Ok(v) => v,
            // A new ZF solution that is singular is not accepted.
            Err(Error::SingularChannel { .. }) => {
                stop = StopReason::Stalled;
                break;
            }
            Err(e) => return Err(at(it)(e)),
        };
        let cand_eval = system.evaluate(&cand.amplitudes, &cand_digital, noise).map_err(at(it))?;
        let tol = cfg.sdr_solver_tolerance;
        let was_feasible = system.shortfall(eval.link.as_ref()) <= T::lit(1e-9);
        let now_shortfall = system.shortfall(cand_eval.link.as_ref());
        let feasible_ok = now_shortfall <= T::lit(1e-9)
            || (!was_feasible && now_shortfall < system.shortfall(eval.link.as_ref()));
        if cand_eval.mse > eval.mse + tol || !feasible_ok {
            stop = StopReason::Stalled;
            break;
        }
        let delta = eval.mse - cand_eval.mse;
        analog = cand;
        digital = cand_digital;
        eval = cand_eval;
        trace.push(entry(it, &eval));
        if delta < cfg.epsilon {
            stop = StopReason::Converged;
            break;
        }
    }

    let shortfall = system.shortfall(eval.link.as_ref());
    if shortfall > T::lit(1e-9) {
        return Err(last_error.unwrap_or_else(|| {
            at(iterations)(Error::Infeasible {
                weights: analog.weights.iter().map(|w| w.as_f64()).collect(),
                shortfall: shortfall.as_f64(),
            })
        }));
    }
    Ok(AlternatingOutcome {
        digital,
        analog,
        report: MismatchReport {
            alpha: eval.alpha,
            mse: eval.mse,
            trace,
        },
        iterations,
        stop,
        pattern: eval.pattern,
        link: eval.link,
    })
}
