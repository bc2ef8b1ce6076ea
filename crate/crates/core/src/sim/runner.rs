use nalgebra::{DVector, SVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::metrics::{metrics, EnergyMeter, Metrics, RotationBudget};
use super::{perturb, DesiredTrajectory, DisturbanceProcess, NoiseModel};
use crate::control::{
    control_adaptive_of, control_adaptive_sf, control_state_feedback, filter_x_matrix, initial_mode,
    jump_rule, tanh_filter_rate, v_adaptive_of, v_adaptive_sf, v_state_feedback, ybar_d, ybar_d_dot,
    yf_matrix, AdaptiveOFState, AdaptiveSFState, DesiredPoint, GainsAdaptiveOF, GainsAdaptiveSF,
    GainsStateFeedback, HybridLogic, Mode, STATE_FEEDBACK_ALPHA,
};
use crate::dynamics::{euler_newton_raw, lagrangian_accel_raw, InertiaModel};
use crate::error::{Error, Result};
use crate::integrate::rk4_step;
use crate::quat::{conj, jmat, qmul, quat_error, vector_part, Mat4x6, Mat4x9, UnitQuaternion, Vec3, Vec4, Vec9};
use crate::scenario::{ControllerKind, PlantForm, ScenarioConfig};

/// `‖ω‖` beyond which a run is declared divergent.
pub const DIVERGENCE_OMEGA: f64 = 1e6;

/// RNG stream reserved for measurement noise.
const NOISE_STREAM: u64 = 1;

/// One output row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRecord {
    pub t: f64,
    pub q: Vec4,
    pub omega: Vec3,
    pub h: Mode,
    /// `‖q − h·qd‖` on the true attitude.
    pub e_norm: f64,
    /// Scalar part of `qd* ⊗ q` on the true attitude.
    pub eps0: f64,
    pub nu_norm: f64,
    /// `‖s‖`, `‖η₁‖` or `‖η₂‖` depending on the controller.
    pub eta_norm: f64,
    pub theta_err_norm: f64,
    pub tau: Vec3,
    pub tau_bar: Vec4,
    pub energy: f64,
    pub v_lyap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpEvent {
    pub t: f64,
    pub h: Mode,
    pub v_before: f64,
    pub v_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Largest `(V_{k+1} − V_k)/(1 + |V_k|)` over steps without a jump.
    pub v_flow_max_rel_increase: f64,
    pub nu_norm_max: f64,
    /// Largest entrywise gap between the linear and saturated damping
    /// filters, when the latter is integrated.
    pub tanh_filter_max_dev: Option<f64>,
    pub q_norm_max_dev: f64,
    #[serde(skip)]
    pub yf_history: Vec<Mat4x9>,
    /// Spacing of `yf_history`.
    pub yf_dt: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<SimRecord>,
    pub jumps: Vec<JumpEvent>,
    pub metrics: Metrics,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Copy)]
enum Law {
    Off,
    StateFeedback(GainsStateFeedback),
    AdaptiveSf(GainsAdaptiveSF),
    AdaptiveOf(GainsAdaptiveOF),
}

/// Offsets of the controller memory inside the flat integrator vector.
#[derive(Debug, Clone, Copy, Default)]
struct Layout {
    /// `Θ̂ (9) | Xf (24) | τf (4) | qf (4)`
    asf: Option<usize>,
    /// `μ (9) | g (4)`
    aof: Option<usize>,
    /// `e_f (4)`
    tanh: Option<usize>,
    /// passive `Xf (24) | qf (4)` for excitation analysis
    pe: Option<usize>,
    len: usize,
}

impl Layout {
    fn new(law: &Law, tanh: bool, pe: bool) -> Self {
        let mut l = Layout::default();
        let mut take = |n: usize| {
            let at = l.len;
            l.len += n;
            Some(at)
        };
        match law {
            Law::AdaptiveSf(_) => l.asf = take(41),
            Law::AdaptiveOf(_) => {
                l.aof = take(13);
                if tanh {
                    l.tanh = take(4);
                }
            }
            _ => {}
        }
        if pe && l.asf.is_none() {
            l.pe = take(28);
        }
        l
    }
}

fn put(x: &mut DVector<f64>, at: usize, vals: &[f64]) {
    x.as_mut_slice()[at..at + vals.len()].copy_from_slice(vals);
}

fn vec4_at(x: &DVector<f64>, at: usize) -> Vec4 {
    Vec4::from_column_slice(&x.as_slice()[at..at + 4])
}

fn vec9_at(x: &DVector<f64>, at: usize) -> Vec9 {
    Vec9::from_column_slice(&x.as_slice()[at..at + 9])
}

fn mat46_at(x: &DVector<f64>, at: usize) -> Mat4x6 {
    Mat4x6::from_column_slice(&x.as_slice()[at..at + 24])
}

fn asf_state(x: &DVector<f64>, at: usize) -> AdaptiveSFState {
    AdaptiveSFState {
        theta_hat: vec9_at(x, at),
        xf: mat46_at(x, at + 9),
        tau_f: vec4_at(x, at + 33),
        q_f: vec4_at(x, at + 37),
    }
}

fn aof_state(x: &DVector<f64>, at: usize) -> AdaptiveOFState {
    AdaptiveOFState {
        mu: vec9_at(x, at),
        g: vec4_at(x, at + 9),
    }
}

/// Plant vector: `q (4) | ω padded or q̇ (4) | path (1)`.
type PlantVec = SVector<f64, 9>;
type Flow = (PlantVec, DVector<f64>);

/// Everything the controller produces at one evaluation.
struct Eval {
    tau_bar: Vec4,
    tau: Vec3,
    rate: DVector<f64>,
    nu: Vec4,
    theta_hat: Option<Vec9>,
    yf: Option<Mat4x9>,
    tanh_dev: Option<f64>,
}

struct Sim {
    cfg: ScenarioConfig,
    inertia: InertiaModel,
    law: Law,
    layout: Layout,
    traj: DesiredTrajectory,
    noise: NoiseModel,
    noise_rng: ChaCha8Rng,
    dist: DisturbanceProcess,
    theta6: [f64; 6],
}

impl Sim {
    fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let law = match cfg.controller {
            ControllerKind::None => Law::Off,
            ControllerKind::Continuous | ControllerKind::Hybrid => {
                Law::StateFeedback(cfg.gains_state_feedback()?)
            }
            ControllerKind::AdaptiveSf => Law::AdaptiveSf(cfg.gains_adaptive_sf()?),
            ControllerKind::AdaptiveOf => Law::AdaptiveOf(cfg.gains_adaptive_of()?),
        };
        let mut noise_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        noise_rng.set_stream(NOISE_STREAM);
        Ok(Self {
            inertia: cfg.inertia_model()?,
            layout: Layout::new(&law, cfg.tanh_filter_check, cfg.pe_history),
            law,
            traj: DesiredTrajectory::new(cfg.trajectory()?, cfg.dt)?,
            noise: cfg.noise()?,
            noise_rng,
            dist: DisturbanceProcess::new(cfg.disturbance()?, cfg.seed),
            theta6: cfg.inertia,
            cfg: cfg.clone(),
        })
    }

    fn theta_true(&self, p: &Vec3) -> Vec9 {
        Vec9::from_iterator(self.theta6.iter().copied().chain(p.iter().copied()))
    }

    /// Body rate of the plant vector.
    fn omega_of(&self, x: &PlantVec) -> Vec3 {
        match self.cfg.plant {
            PlantForm::EulerNewton => Vec3::new(x[4], x[5], x[6]),
            PlantForm::Lagrangian => {
                let q = x.fixed_rows::<4>(0).into_owned();
                2.0 * jmat(&q).transpose() * x.fixed_rows::<4>(4) / q.norm_squared()
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn eval(
        &self,
        q_m: &UnitQuaternion,
        omega: &Vec3,
        ctrl: &DVector<f64>,
        d: &DesiredPoint,
        h: Mode,
    ) -> Result<Eval> {
        let qv = q_m.as_vec();
        let qdot_m = 0.5 * jmat(qv) * omega;
        let mut rate = DVector::zeros(self.layout.len);
        let mut out = match &self.law {
            Law::Off => Eval {
                tau_bar: Vec4::zeros(),
                tau: Vec3::zeros(),
                rate: DVector::zeros(0),
                nu: Vec4::zeros(),
                theta_hat: None,
                yf: None,
                tanh_dev: None,
            },
            Law::StateFeedback(g) => {
                let cmd = control_state_feedback(q_m, &qdot_m, d, h, g, &self.inertia)?;
                Eval {
                    tau_bar: cmd.tau_bar,
                    tau: Vec3::zeros(),
                    rate: DVector::zeros(0),
                    nu: Vec4::zeros(),
                    theta_hat: None,
                    yf: None,
                    tanh_dev: None,
                }
            }
            Law::AdaptiveSf(g) => {
                let at = self.layout.asf.expect("layout");
                let st = asf_state(ctrl, at);
                let cmd = control_adaptive_sf(q_m, &qdot_m, d, h, &st, g, self.inertia.m0())?;
                // the filter sees the generalized torque that reaches the body
                let applied = jmat(qv) * jmat(qv).transpose() * cmd.tau_bar;
                let (xf_dot, tau_f_dot, q_f_dot) = st.filter_rates(qv, &qdot_m, &applied, g.lambda_f);
                put(&mut rate, at, cmd.theta_hat_dot.as_slice());
                put(&mut rate, at + 9, xf_dot.as_slice());
                put(&mut rate, at + 33, tau_f_dot.as_slice());
                put(&mut rate, at + 37, q_f_dot.as_slice());
                Eval {
                    tau_bar: cmd.tau_bar,
                    tau: Vec3::zeros(),
                    rate: DVector::zeros(0),
                    nu: Vec4::zeros(),
                    theta_hat: Some(st.theta_hat),
                    yf: Some(cmd.yf),
                    tanh_dev: None,
                }
            }
            Law::AdaptiveOf(g) => {
                let at = self.layout.aof.expect("layout");
                let st = aof_state(ctrl, at);
                let ydd = ybar_d_dot(d, h);
                let cmd = control_adaptive_of(q_m, d, h, &st, g, self.inertia.m0(), &ydd);
                put(&mut rate, at, cmd.mu_dot.as_slice());
                put(&mut rate, at + 9, cmd.g_dot.as_slice());
                let mut tanh_dev = None;
                if let Some(tf) = self.layout.tanh {
                    let ef = vec4_at(ctrl, tf);
                    let e_dot = qdot_m - h.sign() * d.qd_dot;
                    put(&mut rate, tf, tanh_filter_rate(&ef, &cmd.e, &e_dot, g).as_slice());
                    tanh_dev = Some((ef.map(f64::tanh) - cmd.nu).amax());
                }
                Eval {
                    tau_bar: cmd.tau_bar,
                    tau: Vec3::zeros(),
                    rate: DVector::zeros(0),
                    nu: cmd.nu,
                    theta_hat: Some(cmd.theta_hat),
                    yf: None,
                    tanh_dev,
                }
            }
        };
        if let Some(pe) = self.layout.pe {
            let lf = self.cfg.lambda_f;
            let xf = mat46_at(ctrl, pe);
            let qf = vec4_at(ctrl, pe + 24);
            put(&mut rate, pe, (lf * (filter_x_matrix(qv, &qdot_m, lf) - xf)).as_slice());
            put(&mut rate, pe + 24, (lf * (qv - qf)).as_slice());
            out.yf = Some(yf_matrix(&xf, &qf, qv, &qdot_m, lf));
        }
        out.tau = 2.0 * jmat(qv).transpose() * out.tau_bar;
        out.rate = rate;
        Ok(out)
    }

    /// Fails with a divergence error once the state leaves a sane range.
    fn guard(&self, x: &PlantVec, t: f64) -> Result<()> {
        let omega_norm = self.omega_of(x).norm();
        if omega_norm <= DIVERGENCE_OMEGA && x.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NumericalDivergence { t, omega_norm })
        }
    }

    /// Plant rate including the path-length integrand.
    fn plant_rate(&self, x: &PlantVec, tau: &Vec3, p: &Vec3, d: &DesiredPoint) -> PlantVec {
        let q = x.fixed_rows::<4>(0).into_owned();
        let mut r = PlantVec::zeros();
        let qdot = match self.cfg.plant {
            PlantForm::EulerNewton => {
                let omega = Vec3::new(x[4], x[5], x[6]);
                let (qdot, omega_dot) = euler_newton_raw(&q, &omega, &(tau + p), &self.inertia);
                r.fixed_rows_mut::<3>(4).copy_from(&omega_dot);
                qdot
            }
            PlantForm::Lagrangian => {
                let qdot = x.fixed_rows::<4>(4).into_owned();
                let tau_bar = 0.5 * jmat(&q) * (tau + p);
                let qddot = lagrangian_accel_raw(&q, &qdot, &tau_bar, &self.inertia);
                r.fixed_rows_mut::<4>(4).copy_from(&qddot);
                qdot
            }
        };
        r.fixed_rows_mut::<4>(0).copy_from(&qdot);
        // relative body rate ω_e = 2·vec(ε*⊗ε̇), ε = qd*⊗q
        let qd = d.qd.as_vec();
        let eps = qmul(&conj(qd), &q);
        let eps_dot = qmul(&conj(&d.qd_dot), &q) + qmul(&conj(qd), &qdot);
        r[8] = (2.0 * vector_part(&qmul(&conj(&eps), &eps_dot))).norm();
        r
    }

    fn lyapunov(
        &self,
        x: &PlantVec,
        d: &DesiredPoint,
        h: Mode,
        ev: &Eval,
        p: &Vec3,
    ) -> (f64, f64) {
        let q = UnitQuaternion::new_unchecked(x.fixed_rows::<4>(0).into_owned());
        let qdot = 0.5 * jmat(q.as_vec()) * self.omega_of(x);
        let r = d.reassigned(h);
        let (e, e_dot) = (q.as_vec() - r.q, qdot - r.q_dot);
        match &self.law {
            Law::Off => (0.0, 0.0),
            Law::StateFeedback(g) => {
                let s = e_dot + g.lambda() * e;
                (
                    s.norm(),
                    v_state_feedback(&q, &qdot, d, h, g, &self.inertia, STATE_FEEDBACK_ALPHA),
                )
            }
            Law::AdaptiveSf(g) => {
                let tt = ev.theta_hat.expect("adaptive") - self.theta_true(p);
                (
                    (e_dot + e).norm(),
                    v_adaptive_sf(&q, &qdot, d, h, g.kp, g.gamma2, &tt, &self.inertia),
                )
            }
            Law::AdaptiveOf(g) => {
                let tt = ev.theta_hat.expect("adaptive") - self.theta_true(p);
                (
                    (e_dot + e + ev.nu).norm(),
                    v_adaptive_of(&q, &qdot, d, h, &ev.nu, &tt, g, &self.inertia),
                )
            }
        }
    }

    fn execute(mut self) -> Result<RunOutput> {
        let cfg = self.cfg.clone();
        let (dt, n) = (cfg.dt, cfg.steps());
        let q0 = cfg.initial_attitude()?;
        let omega0 = Vec3::from(cfg.omega0);

        let mut x = PlantVec::zeros();
        x.fixed_rows_mut::<4>(0).copy_from(q0.as_vec());
        match cfg.plant {
            PlantForm::EulerNewton => x.fixed_rows_mut::<3>(4).copy_from(&omega0),
            PlantForm::Lagrangian => x
                .fixed_rows_mut::<4>(4)
                .copy_from(&(0.5 * jmat(q0.as_vec()) * omega0)),
        }

        // Initial measurement, mode and controller memory.
        let offset0 = self.noise.draw(&mut self.noise_rng);
        let q_m0 = perturb(q0.as_vec(), &offset0)?;
        let d0 = self.traj.at(0.0);
        let h0 = match cfg.initial_mode()? {
            Some(h) => h,
            None => initial_mode(quat_error(&d0.qd, &q_m0)[0]),
        };
        let mut logic = HybridLogic::new(h0, cfg.delta)?;
        let switching = cfg.controller.switches();
        let mut ctrl = DVector::zeros(self.layout.len);
        let qdot_m0 = 0.5 * jmat(q_m0.as_vec()) * omega0;
        let theta_hat0 = cfg.theta_hat_initial();
        if let (Law::AdaptiveSf(g), Some(at)) = (&self.law, self.layout.asf) {
            put(&mut ctrl, at, theta_hat0.as_slice());
            let ev = self.eval(&q_m0, &omega0, &ctrl, &d0, h0)?;
            let applied = jmat(q_m0.as_vec()) * jmat(q_m0.as_vec()).transpose() * ev.tau_bar;
            let st = AdaptiveSFState::new(theta_hat0, q_m0.as_vec(), &qdot_m0, &applied, g.lambda_f);
            put(&mut ctrl, at + 9, st.xf.as_slice());
            put(&mut ctrl, at + 33, st.tau_f.as_slice());
            put(&mut ctrl, at + 37, st.q_f.as_slice());
        }
        if let (Law::AdaptiveOf(g), Some(at)) = (&self.law, self.layout.aof) {
            g.validate_for_run()?;
            let e0 = q_m0.as_vec() - h0.sign() * d0.qd.as_vec();
            let st = AdaptiveOFState::new(&theta_hat0, &e0, &ybar_d(&d0, h0), g);
            put(&mut ctrl, at, st.mu.as_slice());
            put(&mut ctrl, at + 9, st.g.as_slice());
        }
        if let Some(pe) = self.layout.pe {
            let lf = cfg.lambda_f;
            put(&mut ctrl, pe, filter_x_matrix(q_m0.as_vec(), &qdot_m0, lf).as_slice());
            put(&mut ctrl, pe + 24, q_m0.as_vec().as_slice());
        }

        let budget_angle = 2.0 * quat_error(&d0.qd, &q0)[0].abs().min(1.0).acos();
        let mut energy = EnergyMeter::new();
        let mut records = Vec::with_capacity(n / cfg.output_decimation + 2);
        let mut jumps = Vec::new();
        let mut diag = Diagnostics {
            v_flow_max_rel_increase: f64::NEG_INFINITY,
            nu_norm_max: 0.0,
            tanh_filter_max_dev: self.layout.tanh.map(|_| 0.0),
            q_norm_max_dev: 0.0,
            yf_history: Vec::new(),
            yf_dt: dt * cfg.output_decimation as f64,
        };
        let mut v_prev: Option<f64> = None;

        for k in 0..=n {
            let t = k as f64 * dt;
            let q = x.fixed_rows::<4>(0).into_owned();
            diag.q_norm_max_dev = diag.q_norm_max_dev.max((q.norm() - 1.0).abs());
            let omega = self.omega_of(&x);
            let offset = if k == 0 {
                offset0
            } else {
                self.noise.draw(&mut self.noise_rng)
            };
            let q_m = perturb(&q, &offset)?;
            let d = self.traj.at(t);
            let p = self.dist.at(0.0);

            let ev_pre = self.eval(&q_m, &omega, &ctrl, &d, logic.h)?;
            let (_, v_pre) = self.lyapunov(&x, &d, logic.h, &ev_pre, &p);
            if let Some(vp) = v_prev {
                let inc = (v_pre - vp) / (1.0 + vp.abs());
                diag.v_flow_max_rel_increase = diag.v_flow_max_rel_increase.max(inc);
            }
            let h_before = logic.h;
            let ev = if switching && jump_rule(&mut logic, &q_m, &d.qd, t) {
                if let (Law::AdaptiveOf(g), Some(at)) = (&self.law, self.layout.aof) {
                    let (e_b, e_a) = (
                        q_m.as_vec() - h_before.sign() * d.qd.as_vec(),
                        q_m.as_vec() - logic.h.sign() * d.qd.as_vec(),
                    );
                    let st = aof_state(&ctrl, at).after_jump(
                        &e_b,
                        &ybar_d(&d, h_before),
                        &e_a,
                        &ybar_d(&d, logic.h),
                        g,
                    );
                    put(&mut ctrl, at, st.mu.as_slice());
                    put(&mut ctrl, at + 9, st.g.as_slice());
                }
                let ev = self.eval(&q_m, &omega, &ctrl, &d, logic.h)?;
                let (_, v_post) = self.lyapunov(&x, &d, logic.h, &ev, &p);
                jumps.push(JumpEvent {
                    t,
                    h: logic.h,
                    v_before: v_pre,
                    v_after: v_post,
                });
                ev
            } else {
                ev_pre
            };
            let (eta_norm, v_now) = self.lyapunov(&x, &d, logic.h, &ev, &p);
            v_prev = Some(v_now);

            energy.push(&ev.tau, dt);
            diag.nu_norm_max = diag.nu_norm_max.max(ev.nu.norm());
            if let (Some(dev), Some(worst)) = (ev.tanh_dev, diag.tanh_filter_max_dev.as_mut()) {
                *worst = worst.max(dev);
            }
            if k % cfg.output_decimation == 0 || k == n {
                let qd = d.qd.as_vec();
                let eps0 = qd.dot(&q);
                records.push(SimRecord {
                    t,
                    q,
                    omega,
                    h: logic.h,
                    e_norm: (q - logic.h.sign() * qd).norm(),
                    eps0,
                    nu_norm: ev.nu.norm(),
                    eta_norm,
                    theta_err_norm: ev
                        .theta_hat
                        .map_or(0.0, |th| (th - self.theta_true(&p)).norm()),
                    tau: ev.tau,
                    tau_bar: ev.tau_bar,
                    energy: energy.value(),
                    v_lyap: v_now,
                });
                if cfg.pe_history {
                    if let Some(yf) = ev.yf {
                        diag.yf_history.push(yf);
                    }
                }
            }
            if k == n {
                break;
            }

            self.dist.begin_step();
            let h = logic.h;
            let mut first = Some(ev);
            let start: Flow = (x, ctrl.clone());
            let next = {
                let this = &mut self;
                rk4_step(&start, dt, |s, y: &Flow| -> Result<Flow> {
                    let (ev, d) = match first.take() {
                        Some(ev) if s == 0.0 => (ev, d),
                        _ => {
                            this.guard(&y.0, t + s)?;
                            let qs = y.0.fixed_rows::<4>(0).into_owned();
                            let q_ms = perturb(&qs, &offset)?;
                            let ds = this.traj.at(t + s);
                            (this.eval(&q_ms, &this.omega_of(&y.0), &y.1, &ds, h)?, ds)
                        }
                    };
                    let p = this.dist.at(s);
                    Ok((this.plant_rate(&y.0, &ev.tau, &p, &d), ev.rate))
                })?
            };
            self.dist.end_step(dt);
            x = next.0;
            ctrl = next.1;
            let q = x.fixed_rows::<4>(0).into_owned();
            let qn = q / q.norm();
            x.fixed_rows_mut::<4>(0).copy_from(&qn);
            if cfg.plant == PlantForm::Lagrangian {
                let qdot = x.fixed_rows::<4>(4).into_owned();
                x.fixed_rows_mut::<4>(4).copy_from(&(qdot - qn * qn.dot(&qdot)));
            }
            self.guard(&x, t + dt)?;
        }
        if diag.v_flow_max_rel_increase == f64::NEG_INFINITY {
            diag.v_flow_max_rel_increase = 0.0;
        }

        let budget = RotationBudget {
            path: x[8],
            initial_angle: budget_angle,
        };
        let metrics = metrics(
            &records,
            &jumps,
            budget,
            cfg.convergence_threshold,
            cfg.controller.is_adaptive(),
        )?;
        Ok(RunOutput {
            records,
            jumps,
            metrics,
            diagnostics: diag,
        })
    }
}

/// Runs a scenario to its horizon.
pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput> {
    Sim::new(cfg)?.execute()
}
