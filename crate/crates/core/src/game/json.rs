//! JSON description of games.
//!
//! Either an explicit tensor
//! `{"players": N, "strategies": [S_1, …], "payoffs": [[…]…]}` indexed
//! `[i][α_1]…[α_N]`, or a constructor:
//! `{"kind": "congestion", "players": N, "facility_payoffs": [[u_α(1), …], …]}`,
//! `{"kind": "minority", "players": N, "win": w, "lose": l}`.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::{congestion_game, minority_game, GameDef};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Value", into = "Value")]
pub enum GameSpec {
    Tensor {
        strategies: Vec<usize>,
        /// Flat payoffs in [`GameDef`] layout.
        payoffs: Vec<f64>,
    },
    Congestion {
        players: usize,
        facility_payoffs: Vec<Vec<f64>>,
    },
    Minority {
        players: usize,
        win: f64,
        lose: f64,
    },
}

fn field<'a>(obj: &'a Map<String, Value>, name: &str) -> Result<&'a Value> {
    obj.get(name)
        .ok_or_else(|| Error::invalid(format!("game.{name}: missing")))
}

fn as_count(v: &Value, path: &str) -> Result<usize> {
    v.as_u64()
        .filter(|&n| n >= 1)
        .map(|n| n as usize)
        .ok_or_else(|| Error::invalid(format!("{path}: expected a positive integer")))
}

fn as_real(v: &Value, path: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::invalid(format!("{path}: expected a number")))
}

fn as_array<'a>(v: &'a Value, path: &str, len: usize) -> Result<&'a Vec<Value>> {
    match v.as_array() {
        Some(a) if a.len() == len => Ok(a),
        Some(a) => Err(Error::invalid(format!(
            "{path}: expected {len} entries, found {}",
            a.len()
        ))),
        None => Err(Error::invalid(format!("{path}: expected an array"))),
    }
}

fn flatten(v: &Value, dims: &[usize], path: String, out: &mut Vec<f64>) -> Result<()> {
    match dims.split_first() {
        None => {
            out.push(as_real(v, &path)?);
            Ok(())
        }
        Some((&len, rest)) => {
            for (k, item) in as_array(v, &path, len)?.iter().enumerate() {
                flatten(item, rest, format!("{path}[{k}]"), out)?;
            }
            Ok(())
        }
    }
}

fn nest(flat: &[f64], dims: &[usize]) -> Value {
    match dims.split_first() {
        None => json!(flat[0]),
        Some((&len, rest)) => {
            let chunk = flat.len() / len;
            Value::Array((0..len).map(|k| nest(&flat[k * chunk..(k + 1) * chunk], rest)).collect())
        }
    }
}

impl GameSpec {
    pub fn from_value(value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::invalid("game: expected a JSON object"))?;
        let kind = match obj.get("kind") {
            None => "tensor",
            Some(k) => k
                .as_str()
                .ok_or_else(|| Error::invalid("game.kind: expected a string"))?,
        };
        match kind {
            "tensor" => {
                let players = as_count(field(obj, "players")?, "game.players")?;
                let strategies = as_array(field(obj, "strategies")?, "game.strategies", players)?
                    .iter()
                    .enumerate()
                    .map(|(i, s)| as_count(s, &format!("game.strategies[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                let mut dims = vec![players];
                dims.extend(&strategies);
                let mut payoffs = Vec::new();
                flatten(field(obj, "payoffs")?, &dims, "game.payoffs".into(), &mut payoffs)?;
                Ok(GameSpec::Tensor {
                    strategies,
                    payoffs,
                })
            }
            "congestion" => {
                let players = as_count(field(obj, "players")?, "game.players")?;
                let table = field(obj, "facility_payoffs")?
                    .as_array()
                    .filter(|a| !a.is_empty())
                    .ok_or_else(|| {
                        Error::invalid("game.facility_payoffs: expected a nonempty array")
                    })?;
                let facility_payoffs = table
                    .iter()
                    .enumerate()
                    .map(|(a, row)| {
                        let path = format!("game.facility_payoffs[{a}]");
                        as_array(row, &path, players)?
                            .iter()
                            .enumerate()
                            .map(|(k, v)| as_real(v, &format!("{path}[{k}]")))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(GameSpec::Congestion {
                    players,
                    facility_payoffs,
                })
            }
            "minority" => {
                let players = as_count(field(obj, "players")?, "game.players")?;
                if players % 2 == 0 {
                    return Err(Error::invalid(format!(
                        "game.players: minority games need an odd player count, got {players}"
                    )));
                }
                let win = as_real(field(obj, "win")?, "game.win")?;
                let lose = as_real(field(obj, "lose")?, "game.lose")?;
                if !(win > lose) {
                    return Err(Error::invalid("game.win: must exceed game.lose"));
                }
                Ok(GameSpec::Minority {
                    players,
                    win,
                    lose,
                })
            }
            other => Err(Error::invalid(format!(
                "game.kind: unknown game kind {other:?} (expected tensor, congestion or minority)"
            ))),
        }
    }

    pub fn to_value(&self) -> Value {
        match self {
            GameSpec::Tensor {
                strategies,
                payoffs,
            } => {
                let mut dims = vec![strategies.len()];
                dims.extend(strategies);
                json!({
                    "players": strategies.len(),
                    "strategies": strategies,
                    "payoffs": nest(payoffs, &dims),
                })
            }
            GameSpec::Congestion {
                players,
                facility_payoffs,
            } => json!({
                "kind": "congestion",
                "players": players,
                "facility_payoffs": facility_payoffs,
            }),
            GameSpec::Minority {
                players,
                win,
                lose,
            } => json!({"kind": "minority", "players": players, "win": win, "lose": lose}),
        }
    }

    /// Explicit tensor description of an existing game.
    pub fn from_game(game: &GameDef) -> Self {
        GameSpec::Tensor {
            strategies: game.strategy_counts().to_vec(),
            payoffs: (0..game.num_players())
                .flat_map(|i| game.player_tensor(i).iter().copied())
                .collect(),
        }
    }

    pub fn build(&self) -> Result<GameDef> {
        match self {
            GameSpec::Tensor {
                strategies,
                payoffs,
            } => GameDef::new(strategies.clone(), payoffs.clone()),
            GameSpec::Congestion {
                players,
                facility_payoffs,
            } => congestion_game(*players, facility_payoffs),
            GameSpec::Minority {
                players,
                win,
                lose,
            } => minority_game(*players, *win, *lose),
        }
    }
}

impl TryFrom<Value> for GameSpec {
    type Error = Error;

    fn try_from(value: Value) -> Result<Self> {
        GameSpec::from_value(&value)
    }
}

impl From<GameSpec> for Value {
    fn from(spec: GameSpec) -> Value {
        spec.to_value()
    }
}
