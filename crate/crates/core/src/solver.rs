//! Outer alternating optimizer: per node, combiner / weight / precoder
//! updates, then one majorization-minimization pass per surface, repeated
//! until the weighted sum rate settles. Also provides the surface-free
//! full-duplex reference and the half-duplex reference.

use crate::channel::ChannelSet;
use crate::config::ScenarioConfig;
use crate::effective::{compose_effective, EffectiveChannels, IrsPhases};
use crate::error::{Error, Result};
use crate::irs::{build_quadratic_form, optimize_irs};
use crate::scalar::{real, SimScalar};
use crate::wmmse::{
    error_covariance, init_precoder, mmse_combiner, update_precoder, weight_matrix,
    weighted_sum_rate, SolverState,
};
use crate::{IrsId, NodeId};

/// Outcome of one solve: converged objective, its trajectory, and the
/// final optimizer variables.
#[derive(Debug, Clone)]
pub struct SolveReport<T: SimScalar> {
    /// Weighted sum rate in bits/s/Hz.
    pub final_wsr: T,
    /// Weighted sum rate (bits/s/Hz) after each outer iteration.
    pub wsr_trajectory: Vec<T>,
    pub outer_iterations: usize,
    pub converged: bool,
    pub final_state: SolverState<T>,
    pub final_phases: IrsPhases<T>,
}

fn check_dimensions<T: SimScalar>(ch: &ChannelSet<T>, config: &ScenarioConfig<T>) -> Result<()> {
    let pairs = [
        (
            "l_from_r",
            ch.l_from_r.shape(),
            (config.node_l_rx, config.node_r_tx),
        ),
        (
            "r_from_l",
            ch.r_from_l.shape(),
            (config.node_r_rx, config.node_l_tx),
        ),
        (
            "l_from_l",
            ch.l_from_l.shape(),
            (config.node_l_rx, config.node_l_tx),
        ),
        (
            "r_from_r",
            ch.r_from_r.shape(),
            (config.node_r_rx, config.node_r_tx),
        ),
        (
            "irs_l_from_l",
            ch.irs_l_from_l.shape(),
            (config.irs_l_dims.0 * config.irs_l_dims.1, config.node_l_tx),
        ),
        (
            "irs_r_from_r",
            ch.irs_r_from_r.shape(),
            (config.irs_r_dims.0 * config.irs_r_dims.1, config.node_r_tx),
        ),
    ];
    for (name, got, want) in pairs {
        if got != want {
            return Err(Error::DimensionMismatch(format!(
                "channel {name} is {got:?}, scenario expects {want:?}"
            )));
        }
    }
    Ok(())
}

fn direct_only<T: SimScalar>(ch: &ChannelSet<T>) -> EffectiveChannels<T> {
    EffectiveChannels {
        l_from_r: ch.l_from_r.clone(),
        r_from_l: ch.r_from_l.clone(),
        l_from_l: ch.l_from_l.clone(),
        r_from_r: ch.r_from_r.clone(),
    }
}

fn run_alternating<T: SimScalar>(
    ch: &ChannelSet<T>,
    config: &ScenarioConfig<T>,
    update_surfaces: bool,
) -> Result<SolveReport<T>> {
    config.validate()?;
    check_dimensions(ch, config)?;
    let ln2 = real::<T>(std::f64::consts::LN_2);
    let include_double = config.double_reflection;

    let n_irs_l = ch.irs_l_from_l.nrows();
    let n_irs_r = ch.irs_r_from_r.nrows();
    let mut phases = IrsPhases::flat(n_irs_l, n_irs_r);

    let mut eff = if update_surfaces {
        compose_effective(ch, &phases, include_double)?
    } else {
        direct_only(ch)
    };

    let mut state = SolverState::new(
        config.node_l_tx,
        config.node_r_tx,
        config.node_l_rx,
        config.node_r_rx,
        config.streams_l,
        config.streams_r,
    );
    state.precoder_l = init_precoder(&eff.r_from_l, config.streams_l, config.power_l);
    state.precoder_r = init_precoder(&eff.l_from_r, config.streams_r, config.power_r);

    // Recompute both nodes' combiners, error covariances and weights at
    // the current precoders and effective channels. Every descent block
    // below starts from such a refresh: that keeps the weighted-MSE
    // surrogate tight at the current iterate, which is what makes the
    // recorded rate sequence nondecreasing.
    let refresh_receivers = |state: &mut SolverState<T>, eff: &EffectiveChannels<T>| {
        state.combiner_l = mmse_combiner(
            eff,
            &state.precoder_l,
            &state.precoder_r,
            NodeId::L,
            config.noise_var_l,
        );
        state.combiner_r = mmse_combiner(
            eff,
            &state.precoder_l,
            &state.precoder_r,
            NodeId::R,
            config.noise_var_r,
        );
        state.error_cov_l = error_covariance(
            eff,
            &state.precoder_l,
            &state.precoder_r,
            NodeId::L,
            config.noise_var_l,
        );
        state.error_cov_r = error_covariance(
            eff,
            &state.precoder_l,
            &state.precoder_r,
            NodeId::R,
            config.noise_var_r,
        );
        state.weight_l = weight_matrix(&state.error_cov_l, config.rate_weight_l);
        state.weight_r = weight_matrix(&state.error_cov_r, config.rate_weight_r);
    };

    let mut converged = false;
    let mut outer_iterations = 0;

    let evaluate = |state: &SolverState<T>, eff: &EffectiveChannels<T>| {
        weighted_sum_rate(
            eff,
            &state.precoder_l,
            &state.precoder_r,
            config.rate_weight_l,
            config.rate_weight_r,
            config.noise_var_l,
            config.noise_var_r,
        ) / ln2
    };
    let mut current_wsr = evaluate(&state, &eff);

    // Every block carries a descent safeguard: blocks whose evaluated rate
    // comes out lower are reverted. In exact arithmetic no block can lower
    // the rate; at extreme stream SINRs the weighted-MSE surrogate goes
    // numerically flat along directions the rate still resolves, and an
    // unguarded step there is an undirected walk.
    for iter in 1..=config.max_outer {
        // Digital block: combiners and weights for both nodes, then both
        // precoders against those receivers (the two subproblems are
        // independent given the receive sides).
        refresh_receivers(&mut state, &eff);
        let kept_precoders = (
            state.precoder_l.clone(),
            state.precoder_r.clone(),
            state.multiplier_l,
            state.multiplier_r,
        );
        for node in [NodeId::L, NodeId::R] {
            let budget = match node {
                NodeId::L => config.power_l,
                NodeId::R => config.power_r,
            };
            let (precoder, multiplier) = update_precoder(
                &eff,
                &state.combiner_l,
                &state.combiner_r,
                &state.weight_l,
                &state.weight_r,
                node,
                budget,
            )?;
            match node {
                NodeId::L => {
                    state.precoder_l = precoder;
                    state.multiplier_l = multiplier;
                }
                NodeId::R => {
                    state.precoder_r = precoder;
                    state.multiplier_r = multiplier;
                }
            }
        }
        let accept_floor = |wsr: T| wsr - real::<T>(1e-12) * wsr.abs();
        let after_digital = evaluate(&state, &eff);
        if after_digital >= accept_floor(current_wsr) {
            current_wsr = current_wsr.max(after_digital);
        } else {
            (
                state.precoder_l,
                state.precoder_r,
                state.multiplier_l,
                state.multiplier_r,
            ) = kept_precoders;
        }

        if update_surfaces {
            for irs in [IrsId::L, IrsId::R] {
                refresh_receivers(&mut state, &eff);
                let (current, other) = match irs {
                    IrsId::L => (&phases.phi_l, &phases.phi_r),
                    IrsId::R => (&phases.phi_r, &phases.phi_l),
                };
                let form = build_quadratic_form(
                    ch,
                    other,
                    &state.precoder_l,
                    &state.precoder_r,
                    &state.combiner_l,
                    &state.combiner_r,
                    &state.weight_l,
                    &state.weight_r,
                    config.noise_var_l,
                    config.noise_var_r,
                    irs,
                    include_double,
                )?;
                let result = optimize_irs(&form, current, config.eps_inner, config.max_inner);
                let kept_phi = match irs {
                    IrsId::L => std::mem::replace(&mut phases.phi_l, result.phi),
                    IrsId::R => std::mem::replace(&mut phases.phi_r, result.phi),
                };
                let candidate_eff = compose_effective(ch, &phases, include_double)?;
                let after_phase = evaluate(&state, &candidate_eff);
                if after_phase >= current_wsr - real::<T>(1e-12) * current_wsr.abs() {
                    current_wsr = current_wsr.max(after_phase);
                    eff = candidate_eff;
                } else {
                    match irs {
                        IrsId::L => phases.phi_l = kept_phi,
                        IrsId::R => phases.phi_r = kept_phi,
                    }
                }
            }
        }

        state.wsr_history.push(current_wsr);
        outer_iterations = iter;

        let n = state.wsr_history.len();
        if n >= 2 {
            let prev = state.wsr_history[n - 2];
            let delta = (current_wsr - prev).abs();
            if delta <= config.eps_outer * current_wsr.abs().max(real(1e-30)) {
                converged = true;
                break;
            }
        }
    }

    let final_wsr = state.wsr_history.last().copied().unwrap_or_else(T::zero);
    let trajectory = state.wsr_history.clone();
    Ok(SolveReport {
        final_wsr,
        wsr_trajectory: trajectory,
        outer_iterations,
        converged,
        final_state: state,
        final_phases: phases,
    })
}

/// Joint digital and surface-phase optimization of the full-duplex link.
pub fn solve_fd_irs<T: SimScalar>(
    ch: &ChannelSet<T>,
    config: &ScenarioConfig<T>,
) -> Result<SolveReport<T>> {
    run_alternating(ch, config, true)
}

/// Full-duplex reference without surfaces: the digital loop runs on the
/// direct channels alone.
pub fn solve_fd_no_irs<T: SimScalar>(
    ch: &ChannelSet<T>,
    config: &ScenarioConfig<T>,
) -> Result<SolveReport<T>> {
    run_alternating(ch, config, false)
}

/// Half-duplex reference: each direction gets the full power budget but
/// half the time resource and sees no self-interference. With the
/// interference loops silenced the two directions decouple exactly, so one
/// surface-free solve yields both rates, halved for the time share.
pub fn solve_hd<T: SimScalar>(
    ch: &ChannelSet<T>,
    config: &ScenarioConfig<T>,
) -> Result<SolveReport<T>> {
    let mut silent = ch.clone();
    let zero_l = crate::CMatrix::<T>::zeros(ch.l_from_l.nrows(), ch.l_from_l.ncols());
    let zero_r = crate::CMatrix::<T>::zeros(ch.r_from_r.nrows(), ch.r_from_r.ncols());
    silent.l_from_l = zero_l;
    silent.r_from_r = zero_r;
    let mut report = run_alternating(&silent, config, false)?;
    let half = real::<T>(0.5);
    report.final_wsr *= half;
    for v in report.wsr_trajectory.iter_mut() {
        *v *= half;
    }
    for v in report.final_state.wsr_history.iter_mut() {
        *v *= half;
    }
    Ok(report)
}
