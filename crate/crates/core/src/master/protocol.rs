//! Event-driven master: round generation, cluster formation, task dispatch,
//! interpolation and decoding.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::cluster::{fit_cluster, min_cluster_size, required_results, ClusterPlan, PlannedCluster};
use super::rate;
use crate::error::{Error, Result};
use crate::fountain::{draw_with, encode_block, CoefVector, PeelingDecoder, RobustSoliton, SolitonParams};
use crate::gf::PrimeField;
use crate::lagrange::{
    extract_products, extract_shared, interpolate_h, EvalPointSet, ResultShare, RoundPolynomialPair, TaskShare,
    WorkerId,
};
use crate::matrix::{assemble_c, BlockPartition, MatrixFq};
use crate::simnet::{sample_response_time, EventQueue, TraceEvent, TraceKind, WorkerModel, TIMER_TIE};

/// Forces the coefficients of one coded product. Indices are one-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoefOverride {
    pub round: usize,
    pub cluster: usize,
    pub slot: usize,
    pub a: CoefVector,
    pub b: CoefVector,
}

#[derive(Clone, Debug)]
pub struct ProtocolConfig {
    pub field: PrimeField,
    pub n: usize,
    pub z: usize,
    pub m: usize,
    pub k: usize,
    pub workers: Vec<WorkerModel>,
    /// Clustering window.
    pub delta: f64,
    pub soliton: SolitonParams,
    /// Round-one products are `A_i B_j` pairs taken in order until all are issued.
    pub systematic_first_round: bool,
    /// Keep issuing unit pairs after round one until every pair went out once.
    pub systematic_cover: bool,
    /// Upper bound on products per cluster.
    pub max_d: Option<usize>,
    /// Round-one clusters; one cluster of everybody when absent.
    pub initial_clusters: Option<Vec<Vec<WorkerId>>>,
    /// Re-form clusters every round from arrival times; otherwise the
    /// round-one clusters are kept for good.
    pub recluster: bool,
    pub coef_overrides: Vec<CoefOverride>,
    /// Block counts `(m_i, k_i)` of the comparison scheme; `(m, k)` by default.
    pub improved: Option<(usize, usize)>,
    pub record_trace: bool,
    pub record_transcript: bool,
    pub max_rounds: usize,
}

impl ProtocolConfig {
    pub fn new(field: PrimeField, z: usize, m: usize, k: usize, workers: Vec<WorkerModel>) -> Self {
        Self {
            field,
            n: workers.len(),
            z,
            m,
            k,
            workers,
            delta: 1.0,
            soliton: SolitonParams::default(),
            systematic_first_round: true,
            systematic_cover: false,
            max_d: None,
            initial_clusters: None,
            recluster: true,
            coef_overrides: Vec::new(),
            improved: None,
            record_trace: false,
            record_transcript: false,
            max_rounds: 1_000_000,
        }
    }

    /// Largest number of products any cluster can carry.
    pub fn d_bound(&self) -> usize {
        let d = (self.n + 1).saturating_sub(2 * self.z) / 2;
        match self.max_d {
            Some(cap) => d.min(cap.max(1)),
            None => d,
        }
    }

    /// Evaluation points used for the whole run.
    pub fn eval_points(&self) -> Result<EvalPointSet> {
        EvalPointSet::consecutive(self.field, self.d_bound() + self.z, self.n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.z == 0 {
            return Err(Error::InvalidArgument("z must be at least 1".into()));
        }
        if self.m == 0 || self.k == 0 {
            return Err(Error::InvalidArgument("m and k must be positive".into()));
        }
        if self.workers.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "{} worker models for n = {}",
                self.workers.len(),
                self.n
            )));
        }
        if self.n < 2 * self.z + 1 {
            return Err(Error::Infeasible(format!(
                "n = {} workers cannot hold a first cluster for z = {}",
                self.n, self.z
            )));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "window must be positive, got {}",
                self.delta
            )));
        }
        if self.max_d == Some(0) {
            return Err(Error::InvalidArgument("max_d must be at least 1".into()));
        }
        self.soliton.validate()?;
        for w in &self.workers {
            w.validate()?;
        }
        self.eval_points()?;
        if let Some(groups) = &self.initial_clusters {
            ClusterPlan::from_groups(groups, self.n, self.z, self.max_d)?;
        }
        for o in &self.coef_overrides {
            if o.round == 0 || o.cluster == 0 || o.slot == 0 {
                return Err(Error::InvalidArgument("override indices are one-based".into()));
            }
            if o.a.len() != self.m || o.b.len() != self.k {
                return Err(Error::ShapeMismatch(format!(
                    "override lengths ({}, {}) for m = {}, k = {}",
                    o.a.len(),
                    o.b.len(),
                    self.m,
                    self.k
                )));
            }
        }
        if let Some((mi, ki)) = self.improved {
            if mi == 0 || ki == 0 {
                return Err(Error::InvalidArgument(
                    "comparison block counts must be positive".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Per-cluster summary of one round.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClusterLog {
    pub cluster: usize,
    pub members: Vec<WorkerId>,
    pub n: usize,
    pub d: usize,
    pub required: usize,
    pub responses: usize,
    pub interpolated: bool,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoundLog {
    pub round: usize,
    pub clusters: Vec<ClusterLog>,
}

/// One interpolation of `h`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InterpolationLog {
    pub round: usize,
    pub cluster: usize,
    pub d: usize,
    pub time: f64,
    /// Worker results fed to the interpolation.
    pub worker_results: usize,
    /// Evaluations reused from the round's first cluster.
    pub shared_points: usize,
    /// Results the cluster had received when it interpolated.
    pub results_received: usize,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunMetrics {
    pub n: usize,
    pub z: usize,
    pub m: usize,
    pub k: usize,
    /// Results received up to and including the one that completed decoding.
    pub responses: u64,
    /// Product symbols handed to the decoder.
    pub symbols: u64,
    pub epsilon: f64,
    pub rho_num: u64,
    pub rho_den: u64,
    pub rho: f64,
    /// Completed rounds per cluster index.
    pub tau: Vec<u64>,
    /// Largest number of clusters in a round.
    pub clusters: usize,
    /// Clusters kept the same members in every round.
    pub fixed_partition: bool,
    /// Closed-form response count, reported when the partition never changed,
    /// no cluster had idle members and round counts are in integer ratio.
    pub predicted_responses: Option<u64>,
    pub rho_predicted: Option<f64>,
    pub rho_improved_num: u64,
    pub rho_improved_den: u64,
    pub rho_improved: f64,
    pub improved_over_rho: f64,
    pub sim_time: f64,
    /// Results that reached an already interpolated cluster.
    pub late_results: u64,
    /// Later-cluster interpolations whose `h(alpha_zeta)` matched `R S` and,
    /// once known, the first cluster's values.
    pub shared_checks: u64,
    /// Later-cluster interpolations that filled their quota before the
    /// round's first cluster and took `R S` from the master instead.
    pub shared_from_master: u64,
    pub used_fallback: bool,
    pub rounds: Vec<RoundLog>,
    pub interpolations: Vec<InterpolationLog>,
}

/// Everything the master sent in one cluster of one round.
#[derive(Clone, Debug)]
pub struct ClusterRecord {
    pub cluster: usize,
    pub members: Vec<WorkerId>,
    pub pair: Option<RoundPolynomialPair>,
    pub tasks: Vec<TaskShare>,
}

#[derive(Clone, Debug)]
pub struct RoundRecord {
    pub round: usize,
    pub r: Vec<MatrixFq>,
    pub s: Vec<MatrixFq>,
    pub clusters: Vec<ClusterRecord>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub metrics: RunMetrics,
    pub c: MatrixFq,
    pub points: EvalPointSet,
    pub trace: Vec<TraceEvent>,
    pub transcript: Vec<RoundRecord>,
}

#[derive(Clone, Copy, Debug)]
enum Event {
    Result { worker: WorkerId },
    WindowClose { round: usize, generation: u64 },
}

struct Assignment {
    round: usize,
    cluster: usize,
    dispatched: f64,
    task: TaskShare,
}

#[derive(Default)]
struct WorkerState {
    current: Option<Assignment>,
    last_duration: Option<f64>,
}

struct ClusterState {
    members: Vec<WorkerId>,
    d: usize,
    required: usize,
    pair: Option<RoundPolynomialPair>,
    shares: Vec<ResultShare>,
    responses: usize,
    interpolated: bool,
    tasks: Vec<TaskShare>,
}

impl ClusterState {
    fn new(members: Vec<WorkerId>, d: usize, required: usize) -> Self {
        Self {
            members,
            d,
            required,
            pair: None,
            shares: Vec::new(),
            responses: 0,
            interpolated: false,
            tasks: Vec::new(),
        }
    }
}

#[derive(Default)]
struct Formation {
    pending: Vec<WorkerId>,
    window_end: Option<f64>,
    generation: u64,
    widened: bool,
}

struct RoundState {
    r: Vec<MatrixFq>,
    s: Vec<MatrixFq>,
    clusters: Vec<ClusterState>,
    shared: Option<Vec<MatrixFq>>,
    formation: Formation,
    assigned: usize,
}

struct Run<'a> {
    cfg: &'a ProtocolConfig,
    points: EvalPointSet,
    part: BlockPartition,
    a_blocks: Vec<MatrixFq>,
    b_blocks: Vec<MatrixFq>,
    block_products: Vec<MatrixFq>,
    dist_a: RobustSoliton,
    dist_b: RobustSoliton,
    coding_rng: ChaCha8Rng,
    time_rng: ChaCha8Rng,
    queue: EventQueue<Event>,
    decoder: PeelingDecoder,
    plan: ClusterPlan,
    workers: Vec<WorkerState>,
    rounds: Vec<RoundState>,
    units_issued: usize,
    responses: u64,
    late_results: u64,
    shared_checks: u64,
    shared_from_master: u64,
    tau: Vec<u64>,
    interpolations: Vec<InterpolationLog>,
    trace: Vec<TraceEvent>,
    completed_at: Option<f64>,
}

/// Runs the protocol on `a * b` until the decoder recovers every block
/// product, returning the product and run metrics.
///
/// Coding randomness and response times come from independent streams of
/// `seed`, so the run is a pure function of `(cfg, a, b, seed)`.
pub fn run_protocol(cfg: &ProtocolConfig, a: &MatrixFq, b: &MatrixFq, seed: u64) -> Result<RunOutcome> {
    cfg.validate()?;
    for mat in [a, b] {
        if mat.field() != cfg.field {
            return Err(Error::FieldMismatch {
                left: mat.field().modulus(),
                right: cfg.field.modulus(),
            });
        }
    }
    if a.cols() != b.rows() {
        return Err(Error::ShapeMismatch(format!(
            "A is {:?}, B is {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let mut run = Run::new(cfg, a, b, seed)?;
    run.start()?;
    run.event_loop()?;
    run.finish()
}

impl<'a> Run<'a> {
    fn new(cfg: &'a ProtocolConfig, a: &MatrixFq, b: &MatrixFq, seed: u64) -> Result<Self> {
        let part = BlockPartition::new(a.rows(), a.cols(), b.cols(), cfg.m, cfg.k)?;
        let a_blocks = part.split_a(a)?;
        let b_blocks = part.split_b(b)?;
        let mut block_products = Vec::with_capacity(cfg.m * cfg.k);
        for ai in &a_blocks {
            for bj in &b_blocks {
                block_products.push(ai.matmul(bj)?);
            }
        }
        let plan = match &cfg.initial_clusters {
            Some(groups) => ClusterPlan::from_groups(groups, cfg.n, cfg.z, cfg.max_d)?,
            None => {
                let d = cfg.d_bound();
                ClusterPlan {
                    clusters: vec![PlannedCluster {
                        members: (0..cfg.n).collect(),
                        d,
                        required: required_results(d, 1, cfg.z),
                    }],
                }
            }
        };
        let mut coding_rng = ChaCha8Rng::seed_from_u64(seed);
        coding_rng.set_stream(0);
        let mut time_rng = ChaCha8Rng::seed_from_u64(seed);
        time_rng.set_stream(1);
        Ok(Self {
            cfg,
            points: cfg.eval_points()?,
            part,
            a_blocks,
            b_blocks,
            block_products,
            dist_a: RobustSoliton::new(cfg.m, cfg.soliton)?,
            dist_b: RobustSoliton::new(cfg.k, cfg.soliton)?,
            coding_rng,
            time_rng,
            queue: EventQueue::new(),
            decoder: PeelingDecoder::new(cfg.m, cfg.k),
            plan,
            workers: (0..cfg.n).map(|_| WorkerState::default()).collect(),
            rounds: Vec::new(),
            units_issued: 0,
            responses: 0,
            late_results: 0,
            shared_checks: 0,
            shared_from_master: 0,
            tau: Vec::new(),
            interpolations: Vec::new(),
            trace: Vec::new(),
            completed_at: None,
        })
    }

    fn log(&mut self, time: f64, kind: TraceKind, worker: Option<WorkerId>, round: usize, cluster: Option<usize>) {
        if self.cfg.record_trace {
            self.trace.push(TraceEvent {
                time,
                kind,
                worker,
                round,
                cluster: cluster.map(|u| u + 1),
            });
        }
    }

    fn new_round(&mut self, with_plan: bool) {
        let field = self.cfg.field;
        let (ar, ac) = self.part.a_block_shape();
        let (br, bc) = self.part.b_block_shape();
        let r = (0..self.cfg.z)
            .map(|_| MatrixFq::random(field, ar, ac, &mut self.coding_rng))
            .collect();
        let s = (0..self.cfg.z)
            .map(|_| MatrixFq::random(field, br, bc, &mut self.coding_rng))
            .collect();
        let clusters = if with_plan {
            self.plan
                .clusters
                .iter()
                .map(|c| ClusterState::new(c.members.clone(), c.d, c.required))
                .collect()
        } else {
            Vec::new()
        };
        self.rounds.push(RoundState {
            r,
            s,
            clusters,
            shared: None,
            formation: Formation::default(),
            assigned: 0,
        });
    }

    fn start(&mut self) -> Result<()> {
        self.new_round(true);
        for u in 0..self.plan.len() {
            self.log(0.0, TraceKind::ClusterFormed, None, 1, Some(u));
            let members = self.rounds[0].clusters[u].members.clone();
            for w in members {
                self.dispatch(w, 1, u, 0.0)?;
            }
        }
        self.rounds[0].assigned = self.cfg.n;
        Ok(())
    }

    fn event_loop(&mut self) -> Result<()> {
        while !self.decoder.is_complete() {
            let (now, ev) = self
                .queue
                .step()
                .ok_or_else(|| Error::Protocol("no events left before decoding completed".into()))?;
            match ev {
                Event::Result { worker } => self.on_result(worker, now)?,
                Event::WindowClose { round, generation } => {
                    let f = &self.rounds[round - 1].formation;
                    if f.generation == generation && f.window_end.is_some() {
                        self.try_close(round, now, true)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn next_coefs(&mut self, round: usize, cluster: usize, slot: usize) -> Result<(CoefVector, CoefVector)> {
        let (m, k) = (self.cfg.m, self.cfg.k);
        if let Some(o) = self
            .cfg
            .coef_overrides
            .iter()
            .find(|o| o.round == round && o.cluster == cluster + 1 && o.slot == slot + 1)
        {
            return Ok((o.a.clone(), o.b.clone()));
        }
        let systematic = (self.cfg.systematic_first_round && round == 1) || self.cfg.systematic_cover;
        if systematic && self.units_issued < m * k {
            let p = self.units_issued;
            self.units_issued += 1;
            return Ok((CoefVector::unit(m, p % m)?, CoefVector::unit(k, p / m)?));
        }
        let a = draw_with(&self.dist_a, &mut self.coding_rng);
        let b = draw_with(&self.dist_b, &mut self.coding_rng);
        Ok((a, b))
    }

    fn ensure_pair(&mut self, round: usize, cluster: usize) -> Result<()> {
        if self.rounds[round - 1].clusters[cluster].pair.is_some() {
            return Ok(());
        }
        let d = self.rounds[round - 1].clusters[cluster].d;
        let mut coded_a = Vec::with_capacity(d);
        let mut coded_b = Vec::with_capacity(d);
        for slot in 0..d {
            let (ca, cb) = self.next_coefs(round, cluster, slot)?;
            coded_a.push(encode_block(&self.a_blocks, &ca)?);
            coded_b.push(encode_block(&self.b_blocks, &cb)?);
        }
        let rs = &self.rounds[round - 1];
        let pair = crate::lagrange::build_pair(
            round,
            cluster + 1,
            coded_a,
            coded_b,
            rs.r.clone(),
            rs.s.clone(),
            &self.points,
        )?;
        self.rounds[round - 1].clusters[cluster].pair = Some(pair);
        Ok(())
    }

    fn dispatch(&mut self, worker: WorkerId, round: usize, cluster: usize, now: f64) -> Result<()> {
        self.ensure_pair(round, cluster)?;
        let cl = &mut self.rounds[round - 1].clusters[cluster];
        let pair = cl.pair.as_ref().expect("pair built above");
        let task = pair.eval_task(worker, &self.points)?;
        if self.cfg.record_transcript {
            cl.tasks.push(task.clone());
        }
        let duration = sample_response_time(&self.cfg.workers[worker], now, &mut self.time_rng);
        self.queue
            .push(now + duration, worker as u64, Event::Result { worker })?;
        self.workers[worker].current = Some(Assignment {
            round,
            cluster,
            dispatched: now,
            task,
        });
        self.log(now, TraceKind::TaskDispatched, Some(worker), round, Some(cluster));
        Ok(())
    }

    fn on_result(&mut self, worker: WorkerId, now: f64) -> Result<()> {
        let asg = self.workers[worker]
            .current
            .take()
            .ok_or_else(|| Error::Protocol(format!("result from idle worker {worker}")))?;
        self.responses += 1;
        self.workers[worker].last_duration = Some(now - asg.dispatched);
        self.log(now, TraceKind::ResultReady, Some(worker), asg.round, Some(asg.cluster));
        let share = asg.task.compute()?;
        let cl = &mut self.rounds[asg.round - 1].clusters[asg.cluster];
        cl.responses += 1;
        if cl.interpolated {
            self.late_results += 1;
        } else {
            cl.shares.push(share);
            self.try_interpolate(asg.round, asg.cluster, now)?;
        }
        if self.decoder.is_complete() {
            self.completed_at = Some(now);
            self.log(now, TraceKind::Decoded, None, asg.round, None);
            return Ok(());
        }
        self.assign_next(worker, asg.round + 1, now)
    }

    fn try_interpolate(&mut self, round: usize, cluster: usize, now: f64) -> Result<()> {
        let z = self.cfg.z;
        let rs = &self.rounds[round - 1];
        let cl = &rs.clusters[cluster];
        if cl.interpolated || cl.shares.len() < cl.required {
            return Ok(());
        }
        let shared: Vec<(u64, MatrixFq)> = if cluster == 0 {
            Vec::new()
        } else {
            // The master drew R and S itself, so a cluster that fills its
            // quota before the first one does not have to wait.
            let vals = match &rs.shared {
                Some(vals) => vals.clone(),
                None => {
                    self.shared_from_master += 1;
                    rs.r.iter()
                        .zip(&rs.s)
                        .map(|(r, s)| r.matmul(s))
                        .collect::<Result<_>>()?
                }
            };
            self.points.alphas()[..z].iter().copied().zip(vals).collect()
        };
        let h = interpolate_h(&cl.shares, &shared, cl.d, z)?;
        let pair = cl
            .pair
            .as_ref()
            .ok_or_else(|| Error::Protocol("cluster without polynomials".into()))?;

        let at_alpha = extract_shared(&h, z, &self.points)?;
        for (zeta, val) in at_alpha.iter().enumerate() {
            if *val != rs.r[zeta].matmul(&rs.s[zeta])? {
                return Err(Error::Protocol(format!(
                    "round {round} cluster {}: h(alpha_{}) differs from R S",
                    cluster + 1,
                    zeta + 1
                )));
            }
        }
        let products = extract_products(&h, pair)?;
        let expected = pair.coded_products()?;
        for (p, e) in products.iter().zip(&expected) {
            let mut direct = MatrixFq::zeros(self.cfg.field, e.rows(), e.cols());
            for idx in p.unknowns() {
                direct.add_assign(&self.block_products[idx])?;
            }
            if p.value != *e || direct != *e {
                return Err(Error::Protocol(format!(
                    "round {round} cluster {}: interpolated product disagrees with the coded blocks",
                    cluster + 1
                )));
            }
        }

        let log = InterpolationLog {
            round,
            cluster: cluster + 1,
            d: cl.d,
            time: now,
            worker_results: cl.required,
            shared_points: shared.len(),
            results_received: cl.responses,
        };
        let first_shared = rs.shared.is_none() && cluster == 0;
        if cluster > 0 {
            if rs.shared.as_ref().is_some_and(|v| *v != at_alpha) {
                return Err(Error::Protocol("shared evaluations differ across clusters".into()));
            }
            self.shared_checks += 1;
        }

        let rs = &mut self.rounds[round - 1];
        if first_shared {
            rs.shared = Some(at_alpha);
        }
        let cl = &mut rs.clusters[cluster];
        cl.interpolated = true;
        cl.shares.clear();
        if self.tau.len() <= cluster {
            self.tau.resize(cluster + 1, 0);
        }
        self.tau[cluster] += 1;
        self.interpolations.push(log);
        self.log(now, TraceKind::Interpolated, None, round, Some(cluster));

        for p in products {
            self.decoder.push(p)?;
        }
        Ok(())
    }

    fn assign_next(&mut self, worker: WorkerId, round: usize, now: f64) -> Result<()> {
        if round > self.cfg.max_rounds {
            return Err(Error::Protocol(format!(
                "round limit {} reached before decoding completed",
                self.cfg.max_rounds
            )));
        }
        if round > self.rounds.len() {
            self.new_round(!self.cfg.recluster);
        }
        if !self.cfg.recluster {
            let u = self
                .plan
                .cluster_of(worker)
                .ok_or_else(|| Error::Protocol(format!("worker {worker} has no cluster")))?;
            self.rounds[round - 1].assigned += 1;
            return self.dispatch(worker, round, u, now);
        }
        let delta = self.cfg.delta;
        let f = &mut self.rounds[round - 1].formation;
        f.pending.push(worker);
        if f.window_end.is_none() {
            f.generation += 1;
            f.window_end = Some(now + delta);
            let generation = f.generation;
            self.queue
                .push(now + delta, TIMER_TIE, Event::WindowClose { round, generation })?;
        }
        self.try_close(round, now, false)
    }

    /// Whether a worker still busy on the previous round is predicted to
    /// finish by `until`. Workers without a measured duration count as expected.
    fn arrival_expected(&self, round: usize, until: f64) -> bool {
        self.workers.iter().any(|w| match &w.current {
            Some(asg) if asg.round + 1 == round => match w.last_duration {
                None => true,
                Some(dur) => asg.dispatched + dur <= until,
            },
            _ => false,
        })
    }

    fn try_close(&mut self, round: usize, now: f64, timer: bool) -> Result<()> {
        let (n, z) = (self.cfg.n, self.cfg.z);
        let mut timer = timer;
        loop {
            let rs = &self.rounds[round - 1];
            let pending = rs.formation.pending.len();
            if pending == 0 {
                return Ok(());
            }
            let u = rs.clusters.len() + 1;
            let outside = n - rs.assigned - pending;
            let window_end = rs.formation.window_end.unwrap_or(now);
            let over = timer || rs.formation.widened || outside == 0 || !self.arrival_expected(round, window_end);
            if !over {
                return Ok(());
            }
            if pending < min_cluster_size(u, z) {
                if outside > 0 {
                    self.rounds[round - 1].formation.widened = true;
                    return Ok(());
                }
                // nobody else is coming: the remainder joins the last cluster
                let rs = &mut self.rounds[round - 1];
                let last = rs
                    .clusters
                    .len()
                    .checked_sub(1)
                    .ok_or_else(|| Error::Protocol("first cluster cannot be formed".into()))?;
                let joiners: Vec<WorkerId> = rs.formation.pending.drain(..).collect();
                rs.formation.window_end = None;
                rs.assigned += joiners.len();
                rs.clusters[last].members.extend(&joiners);
                for w in joiners {
                    self.dispatch(w, round, last, now)?;
                }
                return Ok(());
            }

            let (mut size, d) = fit_cluster(pending, u, z, self.cfg.max_d)
                .ok_or_else(|| Error::Protocol("cluster sizing failed".into()))?;
            let left = pending - size;
            if left > 0 && outside == 0 && left < min_cluster_size(u + 1, z) {
                size = pending;
            }
            let rs = &mut self.rounds[round - 1];
            let members: Vec<WorkerId> = rs.formation.pending.drain(..size).collect();
            rs.assigned += size;
            rs.formation.widened = false;
            rs.clusters
                .push(ClusterState::new(members.clone(), d, required_results(d, u, z)));
            let idx = u - 1;
            self.log(now, TraceKind::ClusterFormed, None, round, Some(idx));
            for w in members {
                self.dispatch(w, round, idx, now)?;
            }

            let delta = self.cfg.delta;
            let f = &mut self.rounds[round - 1].formation;
            if f.pending.is_empty() {
                f.window_end = None;
                return Ok(());
            }
            f.generation += 1;
            f.window_end = Some(now + delta);
            let generation = f.generation;
            self.queue
                .push(now + delta, TIMER_TIE, Event::WindowClose { round, generation })?;
            timer = false;
        }
    }

    fn fixed_partition(&self) -> bool {
        let first = &self.rounds[0].clusters;
        self.rounds.iter().all(|rs| {
            rs.clusters.len() <= first.len()
                && rs.clusters.iter().zip(first).all(|(a, b)| {
                    let (mut x, mut y) = (a.members.clone(), b.members.clone());
                    x.sort_unstable();
                    y.sort_unstable();
                    x == y
                })
        })
    }

    fn finish(self) -> Result<RunOutcome> {
        let cfg = self.cfg;
        let blocks = self.decoder.blocks()?;
        let c = assemble_c(&blocks, &self.part)?;
        let mk = (cfg.m * cfg.k) as u64;
        let symbols = self.decoder.symbols_consumed() as u64;
        let epsilon = symbols as f64 / mk as f64 - 1.0;
        let rho = Ratio::new(mk, self.responses);

        let mut tau = self.tau.clone();
        let clusters = self.rounds.iter().map(|r| r.clusters.len()).max().unwrap_or(0);
        tau.resize(clusters.max(tau.len()), 0);

        let fixed_partition = self.fixed_partition();
        let exact_parity = self.rounds[0].clusters.iter().all(|c| c.members.len() == c.required);
        let predicted_responses = if fixed_partition && exact_parity {
            rate::proportional_responses_exact(symbols, cfg.z, &tau).ok()
        } else {
            None
        };
        let rho_predicted = predicted_responses.map(|n| mk as f64 / n as f64);
        let (mi, ki) = cfg.improved.unwrap_or((cfg.m, cfg.k));
        let rho_i = rate::improved_scheme_rate(cfg.m, cfg.k, mi, ki, cfg.z)?;
        let improved_over_rho = rate::to_f64(rate::rate_ratio(rho_i, rho)?);

        let rounds_log = self
            .rounds
            .iter()
            .enumerate()
            .filter(|(_, rs)| !rs.clusters.is_empty())
            .map(|(t, rs)| RoundLog {
                round: t + 1,
                clusters: rs
                    .clusters
                    .iter()
                    .enumerate()
                    .map(|(u, cl)| ClusterLog {
                        cluster: u + 1,
                        members: cl.members.clone(),
                        n: cl.members.len(),
                        d: cl.d,
                        required: cl.required,
                        responses: cl.responses,
                        interpolated: cl.interpolated,
                    })
                    .collect(),
            })
            .collect();

        let metrics = RunMetrics {
            n: cfg.n,
            z: cfg.z,
            m: cfg.m,
            k: cfg.k,
            responses: self.responses,
            symbols,
            epsilon,
            rho_num: *rho.numer(),
            rho_den: *rho.denom(),
            rho: rate::to_f64(rho),
            tau,
            clusters,
            fixed_partition,
            predicted_responses,
            rho_predicted,
            rho_improved_num: *rho_i.numer(),
            rho_improved_den: *rho_i.denom(),
            rho_improved: rate::to_f64(rho_i),
            improved_over_rho,
            sim_time: self.completed_at.unwrap_or(0.0),
            late_results: self.late_results,
            shared_checks: self.shared_checks,
            shared_from_master: self.shared_from_master,
            used_fallback: self.decoder.used_fallback(),
            rounds: rounds_log,
            interpolations: self.interpolations,
        };

        let transcript = if cfg.record_transcript {
            self.rounds
                .into_iter()
                .enumerate()
                .map(|(t, rs)| RoundRecord {
                    round: t + 1,
                    r: rs.r,
                    s: rs.s,
                    clusters: rs
                        .clusters
                        .into_iter()
                        .enumerate()
                        .map(|(u, cl)| ClusterRecord {
                            cluster: u + 1,
                            members: cl.members,
                            pair: cl.pair,
                            tasks: cl.tasks,
                        })
                        .collect(),
                })
                .collect()
        } else {
            Vec::new()
        };

        Ok(RunOutcome {
            metrics,
            c,
            points: self.points,
            trace: self.trace,
            transcript,
        })
    }
}
