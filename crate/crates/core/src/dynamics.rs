//! Two-population opinion dynamics.
//!
//! Noise traders follow the sign of their local field with probability
//! `1 - q`; contrarians oppose the sign of the global magnetization with
//! probability `1 - q`. Updates are random sequential: one Monte Carlo step
//! (MCS) is `N` single-agent updates on agents drawn uniformly with
//! replacement.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{generate_er, Network, NetworkStats};
use crate::rng::{stream_rng, SimRng, Stream};

/// Strategy constant of noise traders (follow the local majority).
pub const C_NOISE_TRADER: f64 = 1.0;
/// Strategy constant of contrarians (follow the global minority).
pub const C_CONTRARIAN: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraderType {
    NoiseTrader,
    Contrarian,
}

/// How contrarians see the global magnetization during a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MagnetizationUpdate {
    /// Contrarians use the sign of `M` from the start of the current MCS.
    /// This reproduces the published return statistics.
    #[default]
    Frozen,
    /// Every flip is immediately visible to later contrarian updates. With
    /// this rule the contrarians pin `M` near zero.
    Running,
}

#[inline]
pub fn sgn(x: i64) -> i8 {
    x.signum() as i8
}

fn flip_prob(c: f64, q: f64, spin: i8, sign_field: i8) -> f64 {
    0.5 * (1.0 - (1.0 - 2.0 * q) * c * f64::from(spin) * f64::from(sign_field))
}

/// Flip probability of a noise trader with opinion `spin` whose local field
/// has sign `sign_m`.
pub fn flip_prob_noise_trader(q: f64, spin: i8, sign_m: i8) -> f64 {
    flip_prob(C_NOISE_TRADER, q, spin, sign_m)
}

/// Flip probability of a contrarian with opinion `spin` when the global
/// magnetization has sign `sign_big_m`.
pub fn flip_prob_contrarian(q: f64, spin: i8, sign_big_m: i8) -> f64 {
    flip_prob(C_CONTRARIAN, q, spin, sign_big_m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    pub mean_degree: f64,
    pub q: f64,
    pub f: f64,
    pub transient_mcs: usize,
    pub measure_mcs: usize,
    pub seed: u64,
    #[serde(default)]
    pub magnetization_update: MagnetizationUpdate,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 10201,
            mean_degree: 6.0,
            q: 0.240,
            f: 0.20,
            transient_mcs: 1_000,
            measure_mcs: 100_000,
            seed: 1,
            magnetization_update: MagnetizationUpdate::Frozen,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.q) {
            return Err(Error::InvalidParameter(format!("q = {} outside [0, 1]", self.q)));
        }
        if !(0.0..=1.0).contains(&self.f) {
            return Err(Error::InvalidParameter(format!("f = {} outside [0, 1]", self.f)));
        }
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!("need n >= 2, got {}", self.n)));
        }
        Ok(())
    }

    pub fn contrarian_count(&self) -> usize {
        (self.f * self.n as f64).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketState {
    spins: Vec<i8>,
    trader_type: Vec<TraderType>,
    n_lambda: usize,
    n_alpha: usize,
    spin_sum: i64,
}

impl MarketState {
    pub fn new(spins: Vec<i8>, trader_type: Vec<TraderType>) -> Result<Self> {
        if spins.len() != trader_type.len() {
            return Err(Error::InvalidParameter(format!(
                "{} spins but {} trader types",
                spins.len(),
                trader_type.len()
            )));
        }
        if spins.is_empty() {
            return Err(Error::InvalidParameter("market has no agents".into()));
        }
        if let Some(s) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter(format!("spin {s} is not +1 or -1")));
        }
        let n_alpha = trader_type.iter().filter(|&&t| t == TraderType::Contrarian).count();
        let spin_sum = spins.iter().map(|&s| i64::from(s)).sum();
        Ok(Self {
            n_lambda: spins.len() - n_alpha,
            n_alpha,
            spins,
            trader_type,
            spin_sum,
        })
    }

    /// Places `round(f N)` contrarians uniformly without replacement and draws
    /// every spin as +1 or -1 with probability one half.
    pub fn random(n: usize, f: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::InvalidParameter(format!("f = {f} outside [0, 1]")));
        }
        let n_alpha = (f * n as f64).round() as usize;
        let mut trader_type = vec![TraderType::NoiseTrader; n];
        let mut types_rng = stream_rng(seed, Stream::TraderTypes);
        for i in index::sample(&mut types_rng, n, n_alpha) {
            trader_type[i] = TraderType::Contrarian;
        }
        let mut spin_rng = stream_rng(seed, Stream::InitialSpins);
        let spins = (0..n).map(|_| if spin_rng.random::<bool>() { 1 } else { -1 }).collect();
        Self::new(spins, trader_type)
    }

    pub fn n(&self) -> usize {
        self.spins.len()
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn trader_types(&self) -> &[TraderType] {
        &self.trader_type
    }

    pub fn n_lambda(&self) -> usize {
        self.n_lambda
    }

    pub fn n_alpha(&self) -> usize {
        self.n_alpha
    }

    pub fn spin_sum(&self) -> i64 {
        self.spin_sum
    }

    #[inline]
    fn flip(&mut self, i: usize) {
        let s = self.spins[i];
        self.spins[i] = -s;
        self.spin_sum -= 2 * i64::from(s);
    }
}

/// Sum of the neighbours' spins of agent `i`.
#[inline]
pub fn local_field(state: &MarketState, net: &Network, i: usize) -> i64 {
    net.neighbors(i)
        .iter()
        .map(|&j| i64::from(state.spins[j as usize]))
        .sum()
}

/// Mean spin over all agents, noise traders and contrarians alike.
pub fn global_magnetization(state: &MarketState) -> f64 {
    state.spin_sum as f64 / (state.n_lambda + state.n_alpha) as f64
}

/// Flip thresholds indexed by `spin * sign + 1`.
///
/// A flip happens when the top 53 bits of a uniform `u64` fall below
/// `ceil(p 2^53)`, which is the same event as a 53-bit uniform `[0, 1)`
/// float being below `p`.
struct FlipTable {
    noise: [u64; 3],
    contrarian: [u64; 3],
}

fn threshold(p: f64) -> u64 {
    (p * (1u64 << 53) as f64).ceil() as u64
}

impl FlipTable {
    fn new(q: f64) -> Self {
        let row = |rule: fn(f64, i8, i8) -> f64| [-1, 0, 1].map(|g| threshold(rule(q, 1, g)));
        Self {
            noise: row(flip_prob_noise_trader),
            contrarian: row(flip_prob_contrarian),
        }
    }
}

/// One Monte Carlo step: `N` random sequential single-agent updates.
pub fn mcs_step<R: Rng + ?Sized>(
    state: &mut MarketState,
    net: &Network,
    q: f64,
    mode: MagnetizationUpdate,
    rng: &mut R,
) {
    debug_assert_eq!(state.n(), net.n());
    let table = FlipTable::new(q);
    let n = state.n();
    let frozen_sign = sgn(state.spin_sum);
    for _ in 0..n {
        let i = rng.random_range(0..n as u32) as usize;
        let spin = state.spins[i];
        let p = match state.trader_type[i] {
            TraderType::NoiseTrader => {
                let g = sgn(local_field(state, net, i));
                table.noise[(spin * g + 1) as usize]
            }
            TraderType::Contrarian => {
                let g = match mode {
                    MagnetizationUpdate::Running => sgn(state.spin_sum),
                    MagnetizationUpdate::Frozen => frozen_sign,
                };
                table.contrarian[(spin * g + 1) as usize]
            }
        };
        if rng.next_u64() >> 11 < p {
            state.flip(i);
        }
    }
}

/// A network plus market state evolving under a fixed noise level.
#[derive(Debug, Clone)]
pub struct Simulation {
    net: Network,
    state: MarketState,
    q: f64,
    mode: MagnetizationUpdate,
    rng: SimRng,
}

impl Simulation {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let net = generate_er(cfg.n, cfg.mean_degree, cfg.seed)?;
        let state = MarketState::random(cfg.n, cfg.f, cfg.seed)?;
        Ok(Self::from_parts(net, state, cfg.q, cfg.magnetization_update, cfg.seed))
    }

    pub fn from_parts(net: Network, state: MarketState, q: f64, mode: MagnetizationUpdate, seed: u64) -> Self {
        Self {
            net,
            state,
            q,
            mode,
            rng: stream_rng(seed, Stream::Dynamics),
        }
    }

    pub fn step(&mut self) {
        mcs_step(&mut self.state, &self.net, self.q, self.mode, &mut self.rng);
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn state(&self) -> &MarketState {
        &self.state
    }

    pub fn magnetization(&self) -> f64 {
        global_magnetization(&self.state)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesBundle {
    pub magnetization: Vec<f64>,
    pub config: SimConfig,
    pub network_stats: NetworkStats,
}

impl SeriesBundle {
    pub fn mean_abs_magnetization(&self) -> f64 {
        if self.magnetization.is_empty() {
            return f64::NAN;
        }
        self.magnetization.iter().map(|m| m.abs()).sum::<f64>() / self.magnetization.len() as f64
    }
}

/// Builds the network, places traders, discards the transient and records
/// the magnetization after each measured MCS.
pub fn run_simulation(cfg: &SimConfig) -> Result<SeriesBundle> {
    let mut sim = Simulation::new(cfg)?;
    for _ in 0..cfg.transient_mcs {
        sim.step();
    }
    let mut magnetization = Vec::with_capacity(cfg.measure_mcs);
    for _ in 0..cfg.measure_mcs {
        sim.step();
        magnetization.push(sim.magnetization());
    }
    Ok(SeriesBundle {
        magnetization,
        config: cfg.clone(),
        network_stats: sim.network().stats(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SPINS: [i8; 2] = [-1, 1];
    const SIGNS: [i8; 3] = [-1, 0, 1];

    #[test]
    fn noise_trader_examples() {
        assert_eq!(flip_prob_noise_trader(0.0, 1, 1), 0.0);
        for q in [0.0, 0.1, 0.24, 0.5, 1.0] {
            for s in SPINS {
                assert_eq!(flip_prob_noise_trader(q, s, 0), 0.5);
            }
        }
        // 0.5 * (1 + 0.52)
        assert!((flip_prob_noise_trader(0.240, -1, 1) - 0.760).abs() < 1e-15);
    }

    #[test]
    fn contrarian_examples() {
        assert_eq!(flip_prob_contrarian(0.0, 1, 1), 1.0);
        assert_eq!(flip_prob_contrarian(0.0, -1, 1), 0.0);
        assert!((flip_prob_contrarian(0.275, 1, 1) - 0.725).abs() < 1e-15);
        assert_eq!(flip_prob_contrarian(0.3, 1, 0), 0.5);
    }

    #[test]
    fn local_field_examples() {
        let star = Network::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let types = vec![TraderType::NoiseTrader; 4];
        let all_up = MarketState::new(vec![1; 4], types.clone()).unwrap();
        assert_eq!(local_field(&all_up, &star, 0), 3);
        let path = Network::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let mixed = MarketState::new(vec![1, 1, -1], types[..3].to_vec()).unwrap();
        assert_eq!(local_field(&mixed, &path, 1), 0);
        let isolated = Network::from_edges(3, &[(0, 1)]).unwrap();
        assert_eq!(local_field(&mixed, &isolated, 2), 0);
    }

    #[test]
    fn magnetization_examples() {
        let t = |n| vec![TraderType::NoiseTrader; n];
        assert_eq!(global_magnetization(&MarketState::new(vec![1; 6], t(6)).unwrap()), 1.0);
        assert_eq!(
            global_magnetization(&MarketState::new(vec![1, -1, 1, -1], t(4)).unwrap()),
            0.0
        );
        assert_eq!(
            global_magnetization(&MarketState::new(vec![1, 1, 1, -1], t(4)).unwrap()),
            0.5
        );
    }

    #[test]
    fn market_state_rejects_bad_input() {
        assert!(MarketState::new(vec![1, 0], vec![TraderType::NoiseTrader; 2]).is_err());
        assert!(MarketState::new(vec![1], vec![TraderType::NoiseTrader; 2]).is_err());
        assert!(MarketState::random(10, 1.5, 0).is_err());
    }

    #[test]
    fn random_state_places_exact_contrarian_count() {
        let st = MarketState::random(10201, 0.2, 4).unwrap();
        assert_eq!(st.n_alpha(), 2040);
        assert_eq!(st.n_lambda() + st.n_alpha(), 10201);
        assert!(st.spins().iter().all(|&s| s == 1 || s == -1));
    }

    #[test]
    fn zero_noise_consensus_is_absorbing() {
        let net = generate_er(200, 6.0, 2).unwrap();
        let state = MarketState::new(vec![1; 200], vec![TraderType::NoiseTrader; 200]).unwrap();
        // Isolated nodes have sgn(m) = 0 and flip with probability 1/2, so use
        // a network without them.
        let net = if (0..200).any(|i| net.degree(i) == 0) {
            Network::complete(200)
        } else {
            net
        };
        let mut sim = Simulation::from_parts(net, state.clone(), 0.0, MagnetizationUpdate::Running, 3);
        for _ in 0..50 {
            sim.step();
        }
        assert_eq!(sim.state(), &state);
    }

    #[test]
    fn half_noise_flips_half_the_updates() {
        // One agent per market, so every MCS is exactly one observable update.
        for ty in [TraderType::NoiseTrader, TraderType::Contrarian] {
            let net = Network::from_edges(1, &[]).unwrap();
            let mut state = MarketState::new(vec![1], vec![ty]).unwrap();
            let mut rng = stream_rng(9, Stream::Dynamics);
            let steps = 100_000;
            let mut flips = 0;
            for _ in 0..steps {
                let before = state.spins()[0];
                mcs_step(&mut state, &net, 0.5, MagnetizationUpdate::Running, &mut rng);
                flips += usize::from(state.spins()[0] != before);
            }
            let frac = flips as f64 / steps as f64;
            assert!(
                (frac - 0.5).abs() < 4.0 * (0.25 / steps as f64).sqrt(),
                "{ty:?}: {frac}"
            );
        }
    }

    #[test]
    fn measure_zero_gives_empty_series() {
        let cfg = SimConfig {
            n: 50,
            transient_mcs: 5,
            measure_mcs: 0,
            ..SimConfig::default()
        };
        let bundle = run_simulation(&cfg).unwrap();
        assert!(bundle.magnetization.is_empty());
    }

    #[test]
    fn zero_noise_no_contrarians_reaches_consensus() {
        let cfg = SimConfig {
            n: 100,
            mean_degree: 6.0,
            q: 0.0,
            f: 0.0,
            transient_mcs: 100,
            measure_mcs: 10,
            seed: 5,
            ..SimConfig::default()
        };
        let bundle = run_simulation(&cfg).unwrap();
        let net = generate_er(100, 6.0, 5).unwrap();
        let isolated = bundle.network_stats.isolated_nodes;
        assert_eq!(isolated, (0..100).filter(|&i| net.degree(i) == 0).count());
        for m in &bundle.magnetization {
            if isolated == 0 {
                assert_eq!(m.abs(), 1.0);
            } else {
                assert!(m.abs() >= 1.0 - 2.0 * isolated as f64 / 100.0);
            }
        }
    }

    #[test]
    fn simulation_is_deterministic() {
        let cfg = SimConfig {
            n: 300,
            transient_mcs: 20,
            measure_mcs: 50,
            seed: 17,
            ..SimConfig::default()
        };
        assert_eq!(run_simulation(&cfg).unwrap(), run_simulation(&cfg).unwrap());
        let other = SimConfig {
            seed: 18,
            ..cfg.clone()
        };
        assert_ne!(
            run_simulation(&cfg).unwrap().magnetization,
            run_simulation(&other).unwrap().magnetization
        );
    }

    #[test]
    fn frozen_mode_differs_only_for_contrarians() {
        let base = SimConfig {
            n: 300,
            transient_mcs: 10,
            measure_mcs: 30,
            seed: 2,
            f: 0.0,
            ..SimConfig::default()
        };
        let base = SimConfig {
            magnetization_update: MagnetizationUpdate::Running,
            ..base
        };
        let frozen = SimConfig {
            magnetization_update: MagnetizationUpdate::Frozen,
            ..base.clone()
        };
        assert_eq!(
            run_simulation(&base).unwrap().magnetization,
            run_simulation(&frozen).unwrap().magnetization
        );
        let base = SimConfig { f: 0.3, ..base };
        let frozen = SimConfig { f: 0.3, ..frozen };
        assert_ne!(
            run_simulation(&base).unwrap().magnetization,
            run_simulation(&frozen).unwrap().magnetization
        );
    }

    #[test]
    fn order_disorder_contrast() {
        let run = |q| {
            let cfg = SimConfig {
                n: 2000,
                q,
                f: 0.0,
                transient_mcs: 300,
                measure_mcs: 500,
                seed: 8,
                ..SimConfig::default()
            };
            run_simulation(&cfg).unwrap().mean_abs_magnetization()
        };
        assert!(run(0.10) > 0.5);
        assert!(run(0.40) < 0.2);
    }

    proptest! {
        #[test]
        fn flip_probabilities_are_probabilities(q in 0.0f64..=1.0) {
            for s in SPINS {
                for g in SIGNS {
                    let a = flip_prob_noise_trader(q, s, g);
                    let b = flip_prob_contrarian(q, s, g);
                    prop_assert!((0.0..=1.0).contains(&a));
                    prop_assert!((0.0..=1.0).contains(&b));
                    prop_assert_eq!(a, flip_prob_noise_trader(q, -s, -g));
                    prop_assert_eq!(b, flip_prob_contrarian(q, -s, -g));
                    if g != 0 {
                        prop_assert!((a + flip_prob_noise_trader(q, -s, g) - 1.0).abs() < 1e-15);
                        prop_assert!((b + flip_prob_contrarian(q, -s, g) - 1.0).abs() < 1e-15);
                    }
                }
            }
        }

        #[test]
        fn local_field_parity(seed in any::<u64>()) {
            let net = generate_er(60, 4.0, seed).unwrap();
            let state = MarketState::random(60, 0.2, seed).unwrap();
            for i in 0..60 {
                let m = local_field(&state, &net, i);
                let k = net.degree(i) as i64;
                prop_assert!(m.abs() <= k);
                prop_assert_eq!((m - k).rem_euclid(2), 0);
            }
        }

        #[test]
        fn running_sum_tracks_spins(seed in any::<u64>(), q in 0.0f64..=1.0) {
            let net = generate_er(80, 3.0, seed).unwrap();
            let mut state = MarketState::random(80, 0.4, seed).unwrap();
            let mut rng = stream_rng(seed, Stream::Dynamics);
            for _ in 0..5 {
                mcs_step(&mut state, &net, q, MagnetizationUpdate::Running, &mut rng);
            }
            let direct: i64 = state.spins().iter().map(|&s| i64::from(s)).sum();
            prop_assert_eq!(direct, state.spin_sum());
            prop_assert!(global_magnetization(&state).abs() <= 1.0);
        }
    }
}
