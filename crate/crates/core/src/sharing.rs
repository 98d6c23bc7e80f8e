//! Splitting a bundle's profit among the providers that build it.
//!
//! A cooperative game assigns every coalition of providers the profit it can
//! secure on its own (standalone optimum for singletons, bundle optimum for
//! the grand coalition). Coalitions are stored by bitmask, player `i` owning
//! bit `i`.

use std::collections::HashMap;

use crate::error::{invalid, Error, Result};

/// Largest supported number of players; Shapley values enumerate all `2^K`
/// coalitions.
pub const MAX_PLAYERS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicFunction {
    players: Vec<String>,
    values: Vec<f64>,
}

impl CharacteristicFunction {
    fn check_players(players: &[String]) -> Result<()> {
        if players.is_empty() || players.len() > MAX_PLAYERS {
            return Err(invalid(
                "K",
                format!(
                    "between 1 and {MAX_PLAYERS} players are supported, got {}",
                    players.len()
                ),
            ));
        }
        for (i, p) in players.iter().enumerate() {
            if players[..i].contains(p) {
                return Err(invalid("K", format!("player '{p}' is listed twice")));
            }
        }
        Ok(())
    }

    /// Builds the game from a function of the coalition's member indices.
    pub fn from_fn<F: Fn(&[usize]) -> f64>(players: Vec<String>, value: F) -> Result<Self> {
        Self::check_players(&players)?;
        let k = players.len();
        let mut values = vec![0.0; 1 << k];
        for (mask, slot) in values.iter_mut().enumerate().skip(1) {
            let members: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
            let v = value(&members);
            if !v.is_finite() {
                return Err(invalid(
                    "v",
                    format!("coalition value must be finite, got {v}"),
                ));
            }
            *slot = v;
        }
        Ok(Self { players, values })
    }

    /// Builds the game from `(members, value)` pairs. Every nonempty
    /// coalition must appear exactly once; the empty coalition may appear
    /// only with value 0.
    pub fn from_coalitions<S: AsRef<str>>(
        players: Vec<String>,
        entries: &[(Vec<S>, f64)],
    ) -> Result<Self> {
        Self::check_players(&players)?;
        let index: HashMap<&str, usize> = players
            .iter()
            .enumerate()
            .map(|(i, p)| (p.as_str(), i))
            .collect();
        let mut values = vec![None; 1 << players.len()];
        values[0] = Some(0.0);
        for (members, v) in entries {
            if !v.is_finite() {
                return Err(invalid(
                    "v",
                    format!("coalition value must be finite, got {v}"),
                ));
            }
            let mut mask = 0usize;
            for m in members {
                let i = *index.get(m.as_ref()).ok_or_else(|| {
                    invalid("coalition", format!("unknown player '{}'", m.as_ref()))
                })?;
                mask |= 1 << i;
            }
            if mask == 0 {
                if *v != 0.0 {
                    return Err(invalid(
                        "v",
                        format!("the empty coalition is worth 0, got {v}"),
                    ));
                }
                continue;
            }
            if values[mask].is_some() {
                return Err(invalid(
                    "coalition",
                    format!(
                        "coalition {} is given twice",
                        coalition_name(&players, mask)
                    ),
                ));
            }
            values[mask] = Some(*v);
        }
        let values = values
            .iter()
            .enumerate()
            .map(|(mask, v)| {
                v.ok_or_else(|| Error::MissingCoalition(coalition_name(&players, mask)))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self { players, values })
    }

    pub fn two_player(players: [&str; 2], v1: f64, v2: f64, v12: f64) -> Result<Self> {
        let [a, b] = players;
        Self::from_coalitions(
            vec![a.to_string(), b.to_string()],
            &[(vec![a], v1), (vec![b], v2), (vec![a, b], v12)],
        )
    }

    pub fn players(&self) -> &[String] {
        &self.players
    }

    /// Value of the coalition with the given bitmask.
    pub fn value(&self, mask: usize) -> f64 {
        self.values[mask]
    }

    pub fn grand_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// All coalitions, indexed by bitmask.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Member names of a coalition.
    pub fn members(&self, mask: usize) -> Vec<String> {
        (0..self.players.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| self.players[i].clone())
            .collect()
    }
}

fn coalition_name(players: &[String], mask: usize) -> String {
    let names: Vec<&str> = (0..players.len())
        .filter(|i| mask & (1 << i) != 0)
        .map(|i| players[i].as_str())
        .collect();
    format!("{{{}}}", names.join("+"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub players: Vec<String>,
    pub payoffs: Vec<f64>,
}

impl Allocation {
    pub fn new(players: Vec<String>, payoffs: Vec<f64>) -> Result<Self> {
        if players.len() != payoffs.len() {
            return Err(invalid(
                "allocation",
                format!("{} players but {} payoffs", players.len(), payoffs.len()),
            ));
        }
        if let Some(v) = payoffs.iter().find(|v| !v.is_finite()) {
            return Err(invalid(
                "allocation",
                format!("payoffs must be finite, got {v}"),
            ));
        }
        Ok(Self { players, payoffs })
    }

    pub fn total(&self) -> f64 {
        self.payoffs.iter().sum()
    }

    pub fn payoff(&self, player: &str) -> Option<f64> {
        self.players
            .iter()
            .position(|p| p == player)
            .map(|i| self.payoffs[i])
    }
}

/// Exact Shapley value: each player's marginal contribution averaged over
/// all join orders.
pub fn shapley_allocation(game: &CharacteristicFunction) -> Allocation {
    let k = game.players.len();
    let mut factorial = vec![1.0_f64; k + 1];
    for i in 1..=k {
        factorial[i] = factorial[i - 1] * i as f64;
    }
    let payoffs = (0..k)
        .map(|player| {
            let bit = 1 << player;
            (0..game.values.len())
                .filter(|mask| mask & bit == 0)
                .map(|mask| {
                    let s = (mask as u32).count_ones() as usize;
                    let weight = factorial[s] * factorial[k - s - 1] / factorial[k];
                    weight * (game.values[mask | bit] - game.values[mask])
                })
                .sum()
        })
        .collect();
    Allocation {
        players: game.players.clone(),
        payoffs,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoreVerdict {
    pub in_core: bool,
    /// Payoffs add up to the grand-coalition value.
    pub efficient: bool,
    /// Proper coalitions paid less than they could earn alone.
    pub violated_coalitions: Vec<Vec<String>>,
}

const CORE_TOLERANCE: f64 = 1e-9;

/// Tests efficiency and coalitional rationality of an allocation.
pub fn core_check(game: &CharacteristicFunction, allocation: &Allocation) -> Result<CoreVerdict> {
    if game.players != allocation.players {
        return Err(Error::PlayerMismatch {
            game: game.players.clone(),
            allocation: allocation.players.clone(),
        });
    }
    let grand = game.values.len() - 1;
    let paid = |mask: usize| -> f64 {
        (0..game.players.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| allocation.payoffs[i])
            .sum()
    };
    let slack = |v: f64| CORE_TOLERANCE * v.abs().max(1.0);
    let efficient = (paid(grand) - game.grand_value()).abs() <= slack(game.grand_value());
    let violated_coalitions: Vec<Vec<String>> = (1..grand)
        .filter(|&mask| paid(mask) < game.values[mask] - slack(game.values[mask]))
        .map(|mask| game.members(mask))
        .collect();
    Ok(CoreVerdict {
        in_core: efficient && violated_coalitions.is_empty(),
        efficient,
        violated_coalitions,
    })
}

/// Player one's core payoffs in a two-player game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoreInterval {
    pub lower: f64,
    pub upper: f64,
}

impl CoreInterval {
    /// Player one's Shapley payoff.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, payoff: f64) -> bool {
        payoff >= self.lower && payoff <= self.upper
    }
}

/// `[v1, v12 − v2]`, or `None` when the game is strictly subadditive
/// (`v12 < v1 + v2`) or any value is not finite.
pub fn core_interval_two(v1: f64, v2: f64, v12: f64) -> Option<CoreInterval> {
    if !(v1.is_finite() && v2.is_finite() && v12.is_finite()) || v12 < v1 + v2 {
        return None;
    }
    Some(CoreInterval {
        lower: v1,
        upper: v12 - v2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: &[&str]) -> Vec<String> {
        n.iter().map(|s| s.to_string()).collect()
    }

    fn reference_game() -> CharacteristicFunction {
        CharacteristicFunction::two_player(["S1", "S3"], 195.5, 206.02, 487.84).unwrap()
    }

    #[test]
    fn two_player_shapley() {
        let a = shapley_allocation(&reference_game());
        assert!((a.payoffs[0] - 238.66).abs() < 1e-9);
        assert!((a.payoffs[1] - 249.18).abs() < 1e-9);
        assert_eq!(a.payoff("S3"), Some(a.payoffs[1]));
    }

    #[test]
    fn symmetric_and_additive_games() {
        let g = CharacteristicFunction::two_player(["a", "b"], 3.0, 3.0, 10.0).unwrap();
        assert_eq!(shapley_allocation(&g).payoffs, vec![5.0, 5.0]);

        let w = [1.5, -2.0, 4.0, 0.25];
        let g = CharacteristicFunction::from_fn(names(&["a", "b", "c", "d"]), |m| {
            m.iter().map(|&i| w[i]).sum()
        })
        .unwrap();
        for (got, want) in shapley_allocation(&g).payoffs.iter().zip(w) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn core_examples() {
        let g = reference_game();
        let p = names(&["S1", "S3"]);
        let v = core_check(
            &g,
            &Allocation::new(p.clone(), vec![238.66, 249.18]).unwrap(),
        )
        .unwrap();
        assert!(v.in_core);

        let v = core_check(
            &g,
            &Allocation::new(p.clone(), vec![100.0, 387.84]).unwrap(),
        )
        .unwrap();
        assert!(!v.in_core);
        assert!(v.efficient);
        assert_eq!(v.violated_coalitions, vec![names(&["S1"])]);

        let v = core_check(&g, &Allocation::new(p, vec![238.66, 200.0]).unwrap()).unwrap();
        assert!(!v.in_core);
        assert!(!v.efficient);

        let wrong = Allocation::new(names(&["S3", "S1"]), vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            core_check(&g, &wrong),
            Err(Error::PlayerMismatch { .. })
        ));
    }

    #[test]
    fn intervals() {
        let i = core_interval_two(195.5, 206.02, 487.84).unwrap();
        assert_eq!(i.lower, 195.5);
        assert!((i.upper - 281.82).abs() < 1e-9);
        assert!((i.midpoint() - 238.66).abs() < 1e-9);
        let d = core_interval_two(1.0, 1.0, 2.0).unwrap();
        assert_eq!((d.lower, d.upper), (1.0, 1.0));
        assert!(core_interval_two(1.0, 1.0, 1.5).is_none());
        assert!(core_interval_two(f64::NAN, 1.0, 1.5).is_none());
    }

    #[test]
    fn missing_and_malformed_coalitions() {
        let p = names(&["a", "b"]);
        let err = CharacteristicFunction::from_coalitions(
            p.clone(),
            &[(vec!["a"], 1.0), (vec!["b"], 1.0)],
        );
        assert_eq!(err, Err(Error::MissingCoalition("{a+b}".into())));
        let err = CharacteristicFunction::from_coalitions(p.clone(), &[(vec!["z"], 1.0)]);
        assert!(matches!(err, Err(Error::InvalidParameter { .. })));
        let err = CharacteristicFunction::from_coalitions(p, &[(Vec::<&str>::new(), 1.0)]);
        assert!(err.is_err());
        let too_many: Vec<String> = (0..11).map(|i| i.to_string()).collect();
        assert!(CharacteristicFunction::from_fn(too_many, |_| 0.0).is_err());
        assert!(CharacteristicFunction::from_fn(names(&["a", "a"]), |_| 0.0).is_err());
    }
}
