use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};

/// What a rule may see when choosing the next step law: the current time,
/// the current observed position and the observed step covariances
/// (row-major, one `d*d` block per law). Earlier positions are only
/// available to a rule that stores them itself.
pub struct Observation<'a> {
    pub t: u64,
    pub position: &'a [f64],
    pub covariances: &'a [Vec<f64>],
}

impl Observation<'_> {
    /// `x^T M_i x` for the current position.
    pub fn radial_quadratic(&self, i: usize) -> f64 {
        let x = self.position;
        let d = x.len();
        let m = &self.covariances[i];
        let mut total = 0.0;
        for r in 0..d {
            let row = &m[r * d..(r + 1) * d];
            total += x[r] * row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
        total
    }
}

/// Per-walk state of a user supplied rule.
pub trait WalkRule: Send {
    fn choose(&mut self, obs: &Observation<'_>, rng: &mut dyn RngCore) -> usize;
}

/// User supplied adapted rule. `start` is called once per walk, so any
/// memory lives in the returned state and is never shared between walks.
pub trait AdaptiveRule: Send + Sync {
    fn name(&self) -> String;
    fn start(&self) -> Box<dyn WalkRule>;
}

#[derive(Clone)]
pub enum Strategy {
    /// Always law `i` (0-based).
    Fixed(usize),
    RoundRobin,
    UniformRandom,
    /// Law with the largest variance along the current position,
    /// `argmax_i x^T M_i x`; lowest index on ties and at the origin.
    MaxRadialVariance,
    MinRadialVariance,
    Custom(Arc<dyn AdaptiveRule>),
}

impl fmt::Debug for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl Strategy {
    pub fn name(&self) -> String {
        match self {
            Strategy::Fixed(i) => format!("fixed({i})"),
            Strategy::RoundRobin => "round_robin".into(),
            Strategy::UniformRandom => "uniform_random".into(),
            Strategy::MaxRadialVariance => "max_radial_variance".into(),
            Strategy::MinRadialVariance => "min_radial_variance".into(),
            Strategy::Custom(rule) => rule.name(),
        }
    }

    /// Parses the built-in names, `fixed(i)` included.
    pub fn parse(text: &str) -> Option<Strategy> {
        let text = text.trim();
        match text {
            "round_robin" => Some(Strategy::RoundRobin),
            "uniform_random" => Some(Strategy::UniformRandom),
            "max_radial_variance" => Some(Strategy::MaxRadialVariance),
            "min_radial_variance" => Some(Strategy::MinRadialVariance),
            _ => text
                .strip_prefix("fixed(")
                .and_then(|rest| rest.strip_suffix(')'))
                .and_then(|i| i.trim().parse().ok())
                .map(Strategy::Fixed),
        }
    }

    pub(crate) fn start(&self) -> RuleState {
        match self {
            Strategy::Custom(rule) => RuleState::Custom(rule.start()),
            _ => RuleState::Builtin,
        }
    }
}

pub(crate) enum RuleState {
    Builtin,
    Custom(Box<dyn WalkRule>),
}

pub(crate) fn choose<R: RngCore>(
    strategy: &Strategy,
    state: &mut RuleState,
    obs: &Observation<'_>,
    rng: &mut R,
) -> usize {
    let count = obs.covariances.len();
    match (strategy, state) {
        (Strategy::Fixed(i), _) => *i,
        (Strategy::RoundRobin, _) => (obs.t % count as u64) as usize,
        (Strategy::UniformRandom, _) => rng.random_range(0..count),
        (Strategy::MaxRadialVariance, _) => extremal(obs, |a, b| a > b),
        (Strategy::MinRadialVariance, _) => extremal(obs, |a, b| a < b),
        (Strategy::Custom(_), RuleState::Custom(rule)) => rule.choose(obs, rng),
        (Strategy::Custom(_), RuleState::Builtin) => unreachable!("custom rule without state"),
    }
}

fn extremal(obs: &Observation<'_>, better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = 0;
    let mut best_value = obs.radial_quadratic(0);
    for i in 1..obs.covariances.len() {
        let v = obs.radial_quadratic(i);
        if better(v, best_value) {
            best = i;
            best_value = v;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn covs() -> Vec<Vec<f64>> {
        vec![vec![4.0, 0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0, 4.0]]
    }

    #[test]
    fn radial_rules_follow_position() {
        let covs = covs();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut state = RuleState::Builtin;
        let along_x = Observation {
            t: 5,
            position: &[2.0, 0.1],
            covariances: &covs,
        };
        let along_y = Observation {
            t: 5,
            position: &[0.1, 2.0],
            covariances: &covs,
        };
        assert_eq!(choose(&Strategy::MaxRadialVariance, &mut state, &along_x, &mut rng), 0);
        assert_eq!(choose(&Strategy::MaxRadialVariance, &mut state, &along_y, &mut rng), 1);
        assert_eq!(choose(&Strategy::MinRadialVariance, &mut state, &along_x, &mut rng), 1);
        let origin = Observation {
            t: 0,
            position: &[0.0, 0.0],
            covariances: &covs,
        };
        assert_eq!(choose(&Strategy::MaxRadialVariance, &mut state, &origin, &mut rng), 0);
    }

    #[test]
    fn round_robin_cycles() {
        let covs = covs();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut state = RuleState::Builtin;
        let picks: Vec<usize> = (0..4)
            .map(|t| {
                let obs = Observation {
                    t,
                    position: &[0.0, 0.0],
                    covariances: &covs,
                };
                choose(&Strategy::RoundRobin, &mut state, &obs, &mut rng)
            })
            .collect();
        assert_eq!(picks, vec![0, 1, 0, 1]);
    }

    #[test]
    fn parse_names() {
        assert!(matches!(Strategy::parse("fixed(2)"), Some(Strategy::Fixed(2))));
        assert!(matches!(
            Strategy::parse("max_radial_variance"),
            Some(Strategy::MaxRadialVariance)
        ));
        assert!(Strategy::parse("fixed(x)").is_none());
        assert!(Strategy::parse("greedy").is_none());
        assert_eq!(Strategy::Fixed(1).name(), "fixed(1)");
    }
}
