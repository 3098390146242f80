//! Windowed episodes under the full policy hierarchy.
//!
//! Every option window the commander (or a scripted stand-in) assigns each
//! living aircraft one mode; the matching frozen low-level controller then
//! flies it for the next twenty ticks. The runner records per-window mode
//! assignments, commander decision samples, and engine events, which is
//! everything commander training, evaluation, and the sweep harness need.

use std::collections::BTreeMap;

use ndarray::ArrayView2;
use rand_chacha::ChaCha8Rng;

use crate::engine::{
    commander_observation, outcome, spawn_scenario, step, AircraftId, LowLevelAction, Mode,
    Outcome, PursuitController, RandomController, ScenarioConfig, StepEvents, Team, WorldState,
    LOW_LEVEL_OBS_WIDTH, OPTION_WINDOW_TICKS,
};
use crate::engine::Controller;
use crate::policy::{
    masked_probs, sample_heads, ActionMask, PolicyNet, PolicyRole, COMMANDER_HEAD_SPEC,
    LOW_LEVEL_HEAD_SPEC,
};
use crate::rng::{fnv1a, substream};

use super::rollout::policy_action;
use super::TrainError;

/// The three trained low-level controllers, immutable once constructed.
/// Commander training and evaluation borrow these and can never write them.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenControllers {
    attack: PolicyNet,
    engage: PolicyNet,
    defend: PolicyNet,
}

impl FrozenControllers {
    pub fn new(
        attack: PolicyNet,
        engage: PolicyNet,
        defend: PolicyNet,
    ) -> Result<Self, TrainError> {
        for (net, role) in [
            (&attack, PolicyRole::Attack),
            (&engage, PolicyRole::Engage),
            (&defend, PolicyRole::Defend),
        ] {
            if net.role != role {
                return Err(TrainError::Setup(format!(
                    "{} slot holds a {} network",
                    role, net.role
                )));
            }
            if net.input_width != LOW_LEVEL_OBS_WIDTH || net.head_spec != LOW_LEVEL_HEAD_SPEC {
                return Err(TrainError::Setup(format!(
                    "{} network has wrong geometry",
                    role
                )));
            }
        }
        Ok(Self { attack, engage, defend })
    }

    /// Freeze all three modes out of a shared-trunk stack.
    pub fn from_stack(stack: &crate::policy::LowLevelPolicies) -> Self {
        Self {
            attack: stack.export_mode(Mode::Attack),
            engage: stack.export_mode(Mode::Engage),
            defend: stack.export_mode(Mode::Defend),
        }
    }

    pub fn get(&self, mode: Mode) -> &PolicyNet {
        match mode {
            Mode::Attack => &self.attack,
            Mode::Engage => &self.engage,
            Mode::Defend => &self.defend,
        }
    }

    /// Hash of every parameter bit, for checking that training elsewhere
    /// left these untouched.
    pub fn checksum(&self) -> u64 {
        let mut bytes = Vec::new();
        for mode in Mode::ALL {
            for p in self.get(mode).params() {
                bytes.extend_from_slice(&p.to_bits().to_le_bytes());
            }
        }
        fnv1a(&bytes)
    }
}

/// How one team picks modes and actions during a windowed episode.
#[derive(Clone, Copy)]
pub enum TeamBehavior<'a> {
    /// Hold course, never fire.
    Noop,
    /// Scripted pure pursuit.
    Pursuit,
    /// Uniform random actions.
    Random,
    /// Every aircraft flies one mode for the whole episode.
    Fixed { controllers: &'a FrozenControllers, mode: Mode },
    /// Each aircraft is dealt attack or engage at spawn and keeps it; no
    /// commander involved.
    AttackEngageSplit { controllers: &'a FrozenControllers },
    /// Each aircraft is dealt a uniform-random mode at spawn and keeps it.
    MixedModes { controllers: &'a FrozenControllers },
    /// The trained hierarchy: a commander assigns modes every window.
    Commander {
        net: &'a PolicyNet,
        m: usize,
        controllers: &'a FrozenControllers,
        /// Sample the commander head when false; take the argmax
        /// (lowest index on ties) when true.
        greedy: bool,
    },
}

/// One commander decision, recorded for PPO at the window timescale.
#[derive(Debug, Clone, PartialEq)]
pub struct CommanderSample {
    pub agent: AircraftId,
    pub obs: Vec<f64>,
    pub mode: Mode,
    pub log_prob: f64,
    pub value: f64,
}

/// Everything that happened in one option window.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WindowRecord {
    pub window: usize,
    pub start_tick: u32,
    /// Mode assignment per mode-driven aircraft living at window start
    /// (both teams; scripted teams contribute nothing).
    pub modes: BTreeMap<AircraftId, Mode>,
    /// Agent-team commander decisions, when that team runs a commander.
    pub samples: Vec<CommanderSample>,
    pub events: Vec<StepEvents>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub outcome: Outcome,
    pub ticks: u32,
    pub windows: Vec<WindowRecord>,
    pub world: WorldState,
}

struct TeamRuntime<'a> {
    behavior: TeamBehavior<'a>,
    /// Spawn-time mode deals for `Fixed` and `AttackEngageSplit`.
    assigned: BTreeMap<AircraftId, Mode>,
    commander_rng: ChaCha8Rng,
    action_rng: ChaCha8Rng,
    random: RandomController,
}

impl<'a> TeamRuntime<'a> {
    fn new(
        behavior: TeamBehavior<'a>,
        team: Team,
        world: &WorldState,
        seed: u64,
    ) -> Self {
        let label = match team {
            Team::Agent => "agent",
            Team::Opponent => "opponent",
        };
        // Distinct streams per team, indexed by purpose.
        let commander_rng = substream(seed, label, 0);
        let action_rng = substream(seed, label, 1);
        let random = RandomController::new(substream(seed, label, 2));
        use rand::Rng;
        let mut assign_rng = substream(seed, label, 3);
        let mut assigned = BTreeMap::new();
        for a in world.aircraft.iter().filter(|a| a.team == team) {
            let mode = match behavior {
                TeamBehavior::Fixed { mode, .. } => mode,
                TeamBehavior::AttackEngageSplit { .. } => {
                    if assign_rng.random::<f64>() < 0.5 {
                        Mode::Attack
                    } else {
                        Mode::Engage
                    }
                }
                TeamBehavior::MixedModes { .. } => {
                    Mode::ALL[assign_rng.random_range(0..Mode::ALL.len())]
                }
                _ => continue,
            };
            assigned.insert(a.id, mode);
        }
        Self { behavior, assigned, commander_rng, action_rng, random }
    }

    /// Window-start mode selection for one living aircraft. Returns the
    /// mode plus the recorded sample when a commander made the call.
    fn select_mode(
        &mut self,
        world: &WorldState,
        id: AircraftId,
    ) -> Result<Option<(Mode, Option<CommanderSample>)>, TrainError> {
        match self.behavior {
            TeamBehavior::Noop | TeamBehavior::Pursuit | TeamBehavior::Random => Ok(None),
            TeamBehavior::Fixed { .. }
            | TeamBehavior::AttackEngageSplit { .. }
            | TeamBehavior::MixedModes { .. } => Ok(Some((self.assigned[&id], None))),
            TeamBehavior::Commander { net, m, greedy, .. } => {
                let obs = commander_observation(world, id, m)?;
                let view = ArrayView2::from_shape((1, obs.len()), &obs)
                    .expect("observation vector reshapes to one row");
                let pass = net.forward(view)?;
                let mask = ActionMask::allow_all(&COMMANDER_HEAD_SPEC);
                let (index, log_prob) = if greedy {
                    let probs = masked_probs(pass.logits[0].row(0), &mask.heads[0])?;
                    let best = probs
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite probs"))
                        .map(|(i, _)| i)
                        .expect("non-empty head");
                    (best, probs[best].ln())
                } else {
                    let (indices, logp) =
                        sample_heads(&pass.logit_rows(0), &mask, &mut self.commander_rng)?;
                    (indices[0], logp)
                };
                let mode = Mode::from_index(index)?;
                let sample = CommanderSample {
                    agent: id,
                    obs,
                    mode,
                    log_prob,
                    value: pass.values[0],
                };
                Ok(Some((mode, Some(sample))))
            }
        }
    }

    fn act(
        &mut self,
        world: &WorldState,
        id: AircraftId,
        mode: Option<Mode>,
    ) -> Result<LowLevelAction, TrainError> {
        match self.behavior {
            TeamBehavior::Noop => Ok(LowLevelAction::neutral()),
            TeamBehavior::Pursuit => Ok(PursuitController.act(world, id)?),
            TeamBehavior::Random => Ok(self.random.act(world, id)?),
            TeamBehavior::Fixed { controllers, .. }
            | TeamBehavior::AttackEngageSplit { controllers }
            | TeamBehavior::MixedModes { controllers }
            | TeamBehavior::Commander { controllers, .. } => {
                let mode = mode.expect("mode-driven aircraft has a window assignment");
                policy_action(controllers.get(mode), world, id, &mut self.action_rng)
            }
        }
    }
}

/// Runs one full episode in twenty-tick option windows. Deterministic in
/// `(scenario, seed)`; the scenario's own seed field is ignored in favor of
/// `seed` so callers can fan episodes out.
pub fn run_team_episode(
    scenario: &ScenarioConfig,
    agents: TeamBehavior,
    opponents: TeamBehavior,
    seed: u64,
) -> Result<EpisodeTrace, TrainError> {
    let mut cfg = scenario.clone();
    cfg.seed = seed;
    let mut world = spawn_scenario(&cfg)?;

    let mut agent_rt = TeamRuntime::new(agents, Team::Agent, &world, seed);
    let mut opp_rt = TeamRuntime::new(opponents, Team::Opponent, &world, seed);

    let mut windows = Vec::new();
    let mut window_index = 0usize;
    while outcome(&world) == Outcome::Ongoing {
        let mut record = WindowRecord {
            window: window_index,
            start_tick: world.tick,
            ..WindowRecord::default()
        };
        for id in world.living_ids() {
            let team = world.aircraft(id)?.team;
            let rt = if team == Team::Agent { &mut agent_rt } else { &mut opp_rt };
            if let Some((mode, sample)) = rt.select_mode(&world, id)? {
                record.modes.insert(id, mode);
                if let Some(sample) = sample {
                    record.samples.push(sample);
                }
            }
        }

        for _ in 0..OPTION_WINDOW_TICKS {
            if outcome(&world) != Outcome::Ongoing {
                break;
            }
            let mut actions = BTreeMap::new();
            for id in world.living_ids() {
                let team = world.aircraft(id)?.team;
                let rt = if team == Team::Agent { &mut agent_rt } else { &mut opp_rt };
                let action = rt.act(&world, id, record.modes.get(&id).copied())?;
                actions.insert(id, action);
            }
            record.events.push(step(&mut world, &actions)?);
        }

        windows.push(record);
        window_index += 1;
    }

    Ok(EpisodeTrace {
        outcome: outcome(&world),
        ticks: world.tick,
        windows,
        world,
    })
}
