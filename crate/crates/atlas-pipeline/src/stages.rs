//! Stage execution: each stage reads its prerequisite artifacts from the
//! run directory, computes, and writes its own artifacts plus a manifest
//! entry. Completed stages short-circuit when re-run under an unchanged
//! config.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};

use atlas_core::covering::{
    continuation_classic, continuation_sweep, subdivision, BoxCollection, BoxDomain,
    CdsEvaluator, ContinuationResult, LiftedEnsemble,
};
use atlas_core::dimension::{coarse_scan, refine_scan};
use atlas_core::dmaps::{build_markov, embed, nystrom_extend_batch, KernelParams};
use atlas_core::dynamics::{AnalyticMap, FlowMap, KsConfig, KsSolver, MgConfig, MgSolver};
use atlas_core::exec::splitmix64;
use atlas_core::io;
use atlas_core::observation::{build_pod_basis, Observer};
use atlas_core::state::{ObservedPoint, StateVector, SystemKind};

use crate::config::{
    dump, CoveringMode, ExperimentConfig, ObservationConfig, SystemConfig,
};
use crate::manifest::{sha256_hex, DirLock, RunManifest};

/// Failure that points the user at the stage producing the missing artifact.
#[derive(Debug, thiserror::Error)]
#[error("missing prerequisite `{artifact}` — run the `{stage}` stage first")]
pub struct MissingPrerequisite {
    pub artifact: String,
    pub stage: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Simulate,
    Pod,
    Cover,
    Dimscan,
    Dmap,
    Extend,
    Export,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Simulate => "simulate",
            Stage::Pod => "pod",
            Stage::Cover => "cover",
            Stage::Dimscan => "dimscan",
            Stage::Dmap => "dmap",
            Stage::Extend => "extend",
            Stage::Export => "export",
        }
    }
}

/// Dependency order of a full run.
pub const ALL_STAGES: [Stage; 7] = [
    Stage::Simulate,
    Stage::Pod,
    Stage::Cover,
    Stage::Dimscan,
    Stage::Dmap,
    Stage::Extend,
    Stage::Export,
];

// independent deterministic seed streams derived from the config seed
const SEED_SIMULATE: u64 = 0x51;
const SEED_COVER: u64 = 0xC0;
const SEED_ANCHORS: u64 = 0xA7;
const SEED_EIGEN: u64 = 0xE1;
const SEED_EXTEND: u64 = 0xE2;

pub struct Runner {
    cfg: ExperimentConfig,
    dir: PathBuf,
    config_hash: String,
    manifest: RunManifest,
    _lock: DirLock,
}

impl Runner {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        let dir = cfg.output_dir.clone();
        let lock = DirLock::acquire(&dir)?;
        let config_hash = sha256_hex(dump(&cfg).as_bytes());
        let manifest = RunManifest::load_or_new(&dir, &config_hash)?;
        Ok(Self { cfg, dir, config_hash, manifest, _lock: lock })
    }

    fn stream(&self, tag: u64) -> u64 {
        splitmix64(self.cfg.seed ^ tag)
    }

    fn artifact(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn require(&self, name: &str, produced_by: &str) -> Result<PathBuf> {
        let path = self.artifact(name);
        if !path.exists() {
            return Err(anyhow!(MissingPrerequisite {
                artifact: name.to_string(),
                stage: produced_by.to_string(),
            }));
        }
        Ok(path)
    }

    pub fn run(&mut self, stage: Stage) -> Result<()> {
        if self.manifest.stage_is_current(&self.dir, stage.name(), &self.config_hash) {
            log::info!("stage {} is up to date, skipping", stage.name());
            return Ok(());
        }
        let start = Instant::now();
        let artifacts = match stage {
            Stage::Simulate => self.simulate(),
            Stage::Pod => self.pod(),
            Stage::Cover => self.cover(),
            Stage::Dimscan => self.dimscan(),
            Stage::Dmap => self.dmap(),
            Stage::Extend => self.extend(),
            Stage::Export => self.export(),
        }
        .with_context(|| format!("stage `{}` failed", stage.name()))?;
        let seconds = start.elapsed().as_secs_f64();
        self.manifest.record_stage(
            &self.dir,
            stage.name(),
            &self.config_hash,
            seconds,
            &artifacts,
        )?;
        log::info!("stage {} finished in {seconds:.2}s", stage.name());
        Ok(())
    }

    pub fn run_all(&mut self) -> Result<()> {
        for stage in ALL_STAGES {
            if stage == Stage::Pod && !matches!(self.cfg.observation, ObservationConfig::Pod { .. })
            {
                continue;
            }
            if stage == Stage::Simulate
                && matches!(self.cfg.system, SystemConfig::Analytic { .. })
            {
                continue;
            }
            self.run(stage)?;
        }
        Ok(())
    }

    // ----- system constructors -------------------------------------------

    fn ks_solver(&self, mu: f64) -> Result<KsSolver> {
        let SystemConfig::Ks { n_modes, dt, .. } = self.cfg.system else {
            bail!("not a Kuramoto-Sivashinsky run");
        };
        Ok(KsSolver::new(KsConfig { mu, n_modes, dt })?)
    }

    fn mg_config(&self) -> Result<MgConfig> {
        let SystemConfig::MackeyGlass { beta, gamma, eta, tau, dt } = self.cfg.system else {
            bail!("not a Mackey-Glass run");
        };
        Ok(MgConfig { beta, gamma, eta, tau, dt })
    }

    /// The paper-style small initial condition exciting the first mode.
    fn ks_initial_state(solver: &KsSolver) -> StateVector {
        let values: Vec<f64> = solver
            .grid()
            .iter()
            .map(|&x| 1e-4 * x.cos() * (1.0 + x.sin()))
            .collect();
        StateVector { values, kind: SystemKind::Ks }
    }

    fn observer(&self) -> Result<Observer> {
        match &self.cfg.observation {
            ObservationConfig::Pod { .. } => {
                let path = self.require("pod_basis.txt", "pod")?;
                Ok(Observer::Pod(io::read_pod_basis(&path)?))
            }
            ObservationConfig::Delay { k } => {
                let mg = self.mg_config()?;
                Ok(Observer::Delay { k: *k, tau: mg.tau })
            }
            ObservationConfig::Identity => Ok(Observer::Identity),
        }
    }

    fn domain(&self) -> Result<BoxDomain> {
        Ok(BoxDomain::new(
            self.cfg.covering.domain_center.clone(),
            self.cfg.covering.domain_radius.clone(),
        )?)
    }

    // ----- stages ---------------------------------------------------------

    /// Integrate the underlying system and store the recorded trajectory:
    /// full states for KS snapshots, the scalar solution for Mackey-Glass.
    fn simulate(&self) -> Result<Vec<PathBuf>> {
        let sim = &self.cfg.simulate;
        let path = self.artifact("states.txt");
        match &self.cfg.system {
            SystemConfig::Ks { .. } => {
                let ObservationConfig::Pod { mu_ref, .. } = self.cfg.observation else {
                    bail!("KS simulation builds POD snapshots and needs a pod observation");
                };
                let solver = self.ks_solver(mu_ref)?;
                let n_records = (sim.total_time / sim.stride).round() as usize;
                let mut state = Self::ks_initial_state(&solver);
                let mut times = Vec::with_capacity(n_records + 1);
                let mut rows = Vec::with_capacity(n_records + 1);
                times.push(0.0);
                rows.push(state.values.clone());
                for i in 1..=n_records {
                    state = solver.advance(&state, sim.stride)?;
                    times.push(i as f64 * sim.stride);
                    rows.push(state.values.clone());
                }
                let skip = (sim.transient_fraction * times.len() as f64).floor() as usize;
                let names: Vec<String> =
                    (0..rows[0].len()).map(|i| format!("u{i}")).collect();
                io::write_trajectory(&path, &names, &times[skip..], &rows[skip..])?;
                log::info!("recorded {} KS snapshots", times.len() - skip);
            }
            SystemConfig::MackeyGlass { .. } => {
                let mg = self.mg_config()?;
                let solver = MgSolver::new(mg)?;
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(self.stream(SEED_SIMULATE));
                let values: Vec<f64> =
                    (0..mg.history_len()).map(|_| rng.gen_range(0.5..1.3)).collect();
                let u0 = StateVector { values, kind: SystemKind::MackeyGlass };
                let series = solver.scalar_series(&u0, sim.total_time)?;
                let skip = (sim.transient_fraction * series.len() as f64).floor() as usize;
                let times: Vec<f64> =
                    (0..series.len() - skip).map(|i| i as f64 * mg.dt).collect();
                let rows: Vec<Vec<f64>> = series[skip..].iter().map(|v| vec![*v]).collect();
                io::write_trajectory(&path, &["u".to_string()], &times, &rows)?;
                log::info!("recorded {} Mackey-Glass samples", rows.len());
            }
            SystemConfig::Analytic { .. } => {
                log::info!("analytic systems need no simulation");
                return Ok(Vec::new());
            }
        }
        Ok(vec![path])
    }

    /// Build the POD basis from the recorded snapshots.
    fn pod(&self) -> Result<Vec<PathBuf>> {
        let ObservationConfig::Pod { k, .. } = self.cfg.observation else {
            bail!("the pod stage requires a pod observation");
        };
        let states = self.require("states.txt", "simulate")?;
        let (_, rows) = io::read_trajectory(&states)?;
        let snapshots: Vec<StateVector> = rows
            .into_iter()
            .map(|values| StateVector { values, kind: SystemKind::Ks })
            .collect();
        let basis = build_pod_basis(&snapshots, k)?;
        log::info!(
            "POD basis: k = {k}, leading singular values {:?}",
            &basis.singular_values[..k.min(3)]
        );
        let path = self.artifact("pod_basis.txt");
        io::write_pod_basis(&path, &basis)?;
        Ok(vec![path])
    }

    /// Mackey-Glass ensemble: sliding history windows along the recorded
    /// scalar trajectory, spaced by the covering stride.
    fn mg_ensemble(&self, observer: &Observer) -> Result<LiftedEnsemble> {
        let mg = self.mg_config()?;
        let states = self.require("states.txt", "simulate")?;
        let (_, rows) = io::read_trajectory(&states)?;
        let series: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let n_h = mg.history_len() - 1;
        let per_stride = self.cfg.covering.stride / mg.dt;
        if (per_stride - per_stride.round()).abs() > 1e-9 {
            bail!("covering stride must be a multiple of the integrator dt");
        }
        let per_stride = per_stride.round() as usize;

        let mut states = Vec::new();
        let mut end = n_h;
        let mut iterate = 0u64;
        while end < series.len() && states.len() < self.cfg.covering.n_test_points {
            let values = series[end - n_h..=end].to_vec();
            states.push((
                StateVector { values, kind: SystemKind::MackeyGlass },
                self.cfg.seed,
                iterate,
            ));
            end += per_stride;
            iterate += 1;
        }
        if states.len() < self.cfg.covering.n_test_points {
            log::warn!(
                "trajectory supports only {} of {} requested ensemble states",
                states.len(),
                self.cfg.covering.n_test_points
            );
        }
        Ok(LiftedEnsemble::from_states(states, observer)?)
    }

    /// KS ensemble: the recorded snapshots themselves.
    fn ks_ensemble(&self, observer: &Observer) -> Result<LiftedEnsemble> {
        let states = self.require("states.txt", "simulate")?;
        let (_, rows) = io::read_trajectory(&states)?;
        let states: Vec<(StateVector, u64, u64)> = rows
            .into_iter()
            .take(self.cfg.covering.n_test_points)
            .enumerate()
            .map(|(i, values)| {
                (StateVector { values, kind: SystemKind::Ks }, self.cfg.seed, i as u64)
            })
            .collect();
        Ok(LiftedEnsemble::from_states(states, observer)?)
    }

    /// Run the configured covering algorithm and write the box file.
    fn cover(&self) -> Result<Vec<PathBuf>> {
        let cov = &self.cfg.covering;
        let domain = self.domain()?;
        let seed = self.stream(SEED_COVER);

        let (collection, dropped) = match (&self.cfg.system, cov.mode) {
            (SystemConfig::Analytic { map, params }, mode) => {
                let map = AnalyticMap::by_name(map, params)?;
                let cds = CdsEvaluator::direct(map);
                match mode {
                    CoveringMode::Subdivision => {
                        let run = subdivision(&cds, domain, cov.depth, cov.points_per_box, seed)?;
                        log_levels(&run.level_counts);
                        (run.collection, run.dropped_outside)
                    }
                    CoveringMode::Classic => {
                        let seed_point = ObservedPoint::new(
                            cov.seed_point.clone().unwrap_or_else(|| vec![0.0; domain.dim()]),
                        );
                        let run = continuation_classic(
                            &cds,
                            domain,
                            &seed_point,
                            cov.depth,
                            cov.seed_level,
                            cov.points_per_box,
                            seed,
                        )?;
                        log_rounds(&run);
                        (run.collection, run.dropped_outside)
                    }
                    CoveringMode::Sweep => bail!("sweep mode needs an underlying flow"),
                }
            }
            (SystemConfig::Ks { mu, .. }, CoveringMode::Sweep) => {
                let observer = self.observer()?;
                let solver = self.ks_solver(*mu)?;
                let seed_state = cov
                    .seed_point
                    .as_ref()
                    .map(|_| bail!("KS sweep seeds at the zero steady state"))
                    .transpose()?
                    .unwrap_or_else(|| {
                        StateVector {
                            values: vec![0.0; solver.config().n_modes],
                            kind: SystemKind::Ks,
                        }
                    });
                let flow = FlowMap::Ks { solver: solver.into(), horizon: cov.stride };
                let run = continuation_sweep(
                    &flow,
                    &observer,
                    domain,
                    cov.depth,
                    &seed_state,
                    cov.n_test_points,
                    cov.sweep_time,
                    cov.stride,
                    cov.perturbation,
                    seed,
                )?;
                (run.collection, run.dropped_outside)
            }
            (SystemConfig::Ks { mu, .. }, mode) => {
                let observer = self.observer()?;
                let ensemble = self.ks_ensemble(&observer)?;
                let solver = self.ks_solver(*mu)?;
                let flow = FlowMap::Ks { solver: solver.into(), horizon: cov.map_time };
                let cds = CdsEvaluator::lifted(flow, observer.clone(), ensemble)?;
                self.lifted_covering(&cds, &observer, domain, mode, seed)?
            }
            (SystemConfig::MackeyGlass { .. }, mode) => {
                let observer = self.observer()?;
                let mg = self.mg_config()?;
                if matches!(mode, CoveringMode::Sweep) {
                    bail!("sweep mode is wired for the KS manifold runs");
                }
                let ensemble = self.mg_ensemble(&observer)?;
                let flow = FlowMap::mackey_glass(mg, cov.map_time)?;
                let cds = CdsEvaluator::lifted(flow, observer.clone(), ensemble)?;
                self.lifted_covering(&cds, &observer, domain, mode, seed)?
            }
        };

        if collection.is_empty() {
            log::warn!("covering is empty");
        }
        log::info!(
            "covering: {} boxes at depth {}, {} images dropped outside the domain",
            collection.len(),
            collection.depth(),
            dropped
        );
        let path = self.artifact("covering.txt");
        io::write_covering(&path, &collection)?;
        Ok(vec![path])
    }

    fn lifted_covering(
        &self,
        cds: &CdsEvaluator,
        observer: &Observer,
        domain: BoxDomain,
        mode: CoveringMode,
        seed: u64,
    ) -> Result<(BoxCollection, u64)> {
        let cov = &self.cfg.covering;
        match mode {
            CoveringMode::Subdivision => {
                let run = subdivision(cds, domain, cov.depth, cov.points_per_box, seed)?;
                log_levels(&run.level_counts);
                Ok((run.collection, run.dropped_outside))
            }
            CoveringMode::Classic => {
                let seed_point = match &cov.seed_point {
                    Some(p) => ObservedPoint::new(p.clone()),
                    None => observer.observe(&self.steady_state()?)?,
                };
                let run = continuation_classic(
                    cds,
                    domain,
                    &seed_point,
                    cov.depth,
                    cov.seed_level,
                    cov.points_per_box,
                    seed,
                )?;
                log_rounds(&run);
                Ok((run.collection, run.dropped_outside))
            }
            CoveringMode::Sweep => unreachable!("handled by the caller"),
        }
    }

    /// The distinguished steady state used to seed continuations.
    fn steady_state(&self) -> Result<StateVector> {
        match &self.cfg.system {
            SystemConfig::Ks { n_modes, .. } => Ok(StateVector {
                values: vec![0.0; *n_modes],
                kind: SystemKind::Ks,
            }),
            SystemConfig::MackeyGlass { .. } => {
                let mg = self.mg_config()?;
                let solver = MgSolver::new(mg)?;
                let u = solver
                    .equilibrium()
                    .ok_or_else(|| anyhow!("no positive equilibrium for these parameters"))?;
                Ok(StateVector {
                    values: vec![u; mg.history_len()],
                    kind: SystemKind::MackeyGlass,
                })
            }
            SystemConfig::Analytic { .. } => bail!("analytic maps seed at an explicit point"),
        }
    }

    fn load_covering(&self) -> Result<BoxCollection> {
        let path = self.require("covering.txt", "cover")?;
        Ok(io::read_covering(&path)?)
    }

    /// The anchor selection shared by the scan and model stages.
    fn anchor_keys(&self, coll: &BoxCollection) -> Result<Vec<u64>> {
        let m = self.cfg.dmaps.m_anchors.min(coll.len());
        if m < self.cfg.dmaps.m_anchors {
            log::warn!(
                "covering holds {} boxes, clamping anchors from {} to {m}",
                coll.len(),
                self.cfg.dmaps.m_anchors
            );
        }
        Ok(coll.midpoint_keys(Some(m), self.stream(SEED_ANCHORS))?)
    }

    fn anchors(&self, coll: &BoxCollection) -> Result<Vec<ObservedPoint>> {
        Ok(self
            .anchor_keys(coll)?
            .into_iter()
            .map(|k| ObservedPoint::new(coll.center_of(k)))
            .collect())
    }

    /// Coarse octave scan plus refinement around its maximizer.
    fn dimscan(&self) -> Result<Vec<PathBuf>> {
        let coll = self.load_covering()?;
        let anchors = self.anchors(&coll)?;
        let scan = &self.cfg.dimscan;
        let coarse = coarse_scan(&anchors, scan.i_min, scan.i_max)?;
        let coarse_path = self.artifact("dimscan_coarse.txt");
        io::write_scan(&coarse_path, &coarse)?;
        let fine = refine_scan(&anchors, &coarse, scan.n_fine)?;
        log::info!(
            "dimension scan: eps* = {:.4e}, d_int = {:.3} ({} anchors)",
            fine.eps_star,
            fine.d_int,
            anchors.len()
        );
        let fine_path = self.artifact("dimscan.txt");
        io::write_scan(&fine_path, &fine)?;
        Ok(vec![coarse_path, fine_path])
    }

    fn tuned_epsilon(&self) -> Result<f64> {
        if let Some(eps) = self.cfg.dmaps.epsilon {
            return Ok(eps);
        }
        let path = self.require("dimscan.txt", "dimscan")?;
        let (eps_star, _) = io::read_scan_summary(&path)?;
        Ok(eps_star)
    }

    /// Build the diffusion model on anchor midpoints and embed them.
    fn dmap(&self) -> Result<Vec<PathBuf>> {
        let coll = self.load_covering()?;
        let anchors = self.anchors(&coll)?;
        let dm = &self.cfg.dmaps;
        let epsilon = self.tuned_epsilon()?;
        let params = KernelParams {
            epsilon,
            alpha: dm.alpha,
            cutoff_radius: (2.0 * epsilon).sqrt(),
            min_neighbors: dm.min_neighbors,
        };
        let model = build_markov(&anchors, &params, dm.n_ev, self.stream(SEED_EIGEN))?;
        log::info!(
            "diffusion model: m = {}, eps = {epsilon:.4e}, lambda_1..3 = {:?}",
            model.len(),
            &model.eigenvalues[1..model.n_ev().min(4)]
        );
        let model_path = self.artifact("model.txt");
        io::write_model(&model_path, &model)?;

        let coords = embed(&model, dm.n_coords.min(model.n_ev().saturating_sub(1)))?;
        let emb_path = self.artifact("embedding.txt");
        io::write_embedding(&emb_path, &coords.points)?;
        Ok(vec![model_path, emb_path])
    }

    /// Extend the embedding to midpoints that were not used as anchors.
    fn extend(&self) -> Result<Vec<PathBuf>> {
        let model = io::read_model(&self.require("model.txt", "dmap")?)?;
        let coll = self.load_covering()?;
        let anchor_keys: std::collections::BTreeSet<u64> =
            self.anchor_keys(&coll)?.into_iter().collect();
        let remaining: Vec<u64> =
            coll.keys().filter(|k| !anchor_keys.contains(k)).collect();
        let pool = BoxCollection::from_keys(coll.domain().clone(), coll.depth(), remaining)?;
        let n = self.cfg.dmaps.n_extend.min(pool.len());
        let points = pool.midpoints(Some(n), self.stream(SEED_EXTEND))?;
        let extensions = nystrom_extend_batch(&model, &points)?;
        let n_coords = self.cfg.dmaps.n_coords.min(model.n_ev().saturating_sub(1));
        let rows: Vec<Vec<f64>> =
            extensions.iter().map(|e| e.y[1..=n_coords].to_vec()).collect();
        let grown = extensions.iter().filter(|e| e.growth_steps > 0).count();
        log::info!("extended {n} midpoints ({grown} needed radius growth)");
        let path = self.artifact("extended.txt");
        io::write_embedding(&path, &rows)?;
        Ok(vec![path])
    }

    /// Embed a trajectory into diffusion coordinates via extension.
    fn export(&self) -> Result<Vec<PathBuf>> {
        let model = io::read_model(&self.require("model.txt", "dmap")?)?;
        let input = match &self.cfg.export.input {
            Some(path) => {
                if !path.exists() {
                    return Err(anyhow!(MissingPrerequisite {
                        artifact: path.display().to_string(),
                        stage: "simulate".to_string(),
                    }));
                }
                path.clone()
            }
            None => self.require("states.txt", "simulate")?,
        };
        let (times, rows) = io::read_trajectory(&input)?;

        let (sample_times, observed): (Vec<f64>, Vec<ObservedPoint>) = match &self.cfg.system {
            SystemConfig::Ks { .. } => {
                let observer = self.observer()?;
                let mut pts = Vec::with_capacity(rows.len());
                for values in &rows {
                    pts.push(observer.observe(&StateVector {
                        values: values.clone(),
                        kind: SystemKind::Ks,
                    })?);
                }
                (times, pts)
            }
            SystemConfig::MackeyGlass { .. } => {
                let mg = self.mg_config()?;
                let observer = self.observer()?;
                let series: Vec<f64> = rows.iter().map(|r| r[0]).collect();
                let n_h = mg.history_len() - 1;
                let per_stride =
                    (self.cfg.covering.stride / mg.dt).round().max(1.0) as usize;
                let mut ts = Vec::new();
                let mut pts = Vec::new();
                let mut end = n_h;
                while end < series.len() {
                    let state = StateVector {
                        values: series[end - n_h..=end].to_vec(),
                        kind: SystemKind::MackeyGlass,
                    };
                    ts.push(times[end]);
                    pts.push(observer.observe(&state)?);
                    end += per_stride;
                }
                (ts, pts)
            }
            SystemConfig::Analytic { .. } => {
                let pts = rows.iter().map(|r| ObservedPoint::new(r.clone())).collect();
                (times, pts)
            }
        };

        let extensions = nystrom_extend_batch(&model, &observed)?;
        let n_coords = self.cfg.dmaps.n_coords.min(model.n_ev().saturating_sub(1));
        let mut names: Vec<String> = (1..=n_coords).map(|l| format!("y{l}")).collect();
        names.push("color_y3".into());
        names.push("phase".into());
        let rows: Vec<Vec<f64>> = extensions
            .iter()
            .map(|e| {
                let mut row: Vec<f64> = e.y[1..=n_coords].to_vec();
                row.push(e.y.get(3).copied().unwrap_or(0.0));
                let phase = if n_coords >= 2 { e.y[2].atan2(e.y[1]) } else { 0.0 };
                row.push(phase);
                row
            })
            .collect();
        log::info!("exported {} embedded trajectory points", rows.len());
        let path = self.artifact("trajectory_embedding.txt");
        io::write_trajectory(&path, &names, &sample_times, &rows)?;
        Ok(vec![path])
    }
}

fn log_levels(levels: &[atlas_core::covering::LevelCount]) {
    for lc in levels {
        log::debug!(
            "level {}: {} -> {} boxes",
            lc.level,
            lc.after_subdivide,
            lc.after_select
        );
    }
    if let Some(last) = levels.last() {
        log::info!("subdivision reached level {} with {} boxes", last.level, last.after_select);
    }
}

fn log_rounds(run: &ContinuationResult) {
    log::info!(
        "continuation: {} rounds, {} boxes",
        run.round_counts.len(),
        run.round_counts.last().copied().unwrap_or(0)
    );
}
