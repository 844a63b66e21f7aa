//! Transcript rendering: one line per move,
//! `t | agent | locution | target | premises => claim`, and a JSON form.

use serde::{Deserialize, Serialize};

use super::{Act, Agent, Locution, Move};
use crate::argument::Argument;
use crate::formula::{parse_formula, Formula};

/// Flat, string-typed form of a move used for JSON export and storage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub t: usize,
    pub agent: Agent,
    pub locution: Locution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub premises: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claim: Option<String>,
}

impl From<Move> for MoveRecord {
    fn from(m: Move) -> Self {
        MoveRecord::from(&m)
    }
}

impl From<&Move> for MoveRecord {
    fn from(m: &Move) -> Self {
        let argument = m.argument();
        MoveRecord {
            t: m.timestep,
            agent: m.agent,
            locution: m.locution(),
            target: m.target().map(|f| f.to_string()),
            premises: argument.map(|a| a.premise.iter().map(|f| f.to_string()).collect()),
            claim: argument.map(|a| a.claim.to_string()),
        }
    }
}

impl TryFrom<MoveRecord> for Move {
    type Error = String;

    fn try_from(r: MoveRecord) -> Result<Self, Self::Error> {
        let parse = |s: &str| parse_formula(s).map_err(|e| format!("'{s}': {e}"));
        let target = || -> Result<Formula, String> {
            parse(r.target.as_deref().ok_or_else(|| format!("{} move without target", r.locution))?)
        };
        let argument = || -> Result<Argument, String> {
            let premises = r.premises.as_ref().ok_or("argument without premises")?;
            let claim = r.claim.as_deref().ok_or("argument without claim")?;
            Ok(Argument::new(
                premises.iter().map(|p| parse(p)).collect::<Result<_, _>>()?,
                parse(claim)?,
            ))
        };
        let act = match r.locution {
            Locution::Query => Act::Query(target()?),
            Locution::Support => Act::Support {
                target: target()?,
                argument: argument()?,
            },
            Locution::Refute => Act::Refute {
                target: target()?,
                argument: argument()?,
            },
            Locution::AgreeToDisagree => Act::AgreeToDisagree,
        };
        Ok(Move::new(r.t, r.agent, act))
    }
}

pub(crate) fn line(m: &Move) -> String {
    let target = m.target().map_or_else(|| "-".to_owned(), |f| f.to_string());
    let argument = match m.argument() {
        Some(a) => {
            let premises: Vec<String> = a.premise.iter().map(|f| f.to_string()).collect();
            format!("{} => {}", premises.join(", "), a.claim)
        }
        None => "-".to_owned(),
    };
    format!("{} | {} | {} | {} | {}", m.timestep, m.agent, m.locution(), target, argument)
}

pub fn transcript_lines(moves: &[Move]) -> String {
    let mut out = String::new();
    for m in moves {
        out.push_str(&line(m));
        out.push('\n');
    }
    out
}

pub fn transcript_records(moves: &[Move]) -> Vec<MoveRecord> {
    moves.iter().map(MoveRecord::from).collect()
}

pub fn parse_transcript_records(records: Vec<MoveRecord>) -> Result<Vec<Move>, String> {
    records.into_iter().map(Move::try_from).collect()
}
