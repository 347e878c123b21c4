//! Finite-extension requirement forcing: binary conditions ordered by
//! prefix extension, decidable string requirements with a small expression
//! language, a breadth-first engine that meets or seals each requirement
//! in turn, and section extraction for conditions read as plane-coded
//! sets.

use std::collections::VecDeque;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::coding::pair_u64;

/// Node cap for [`extend_to_meet`]: searches stop undecided rather than
/// walk more extensions than this.
pub const DEFAULT_NODE_BUDGET: usize = 1 << 22;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ForcingError {
    #[error("search bound {bound} is below the condition length {length}")]
    BoundBelowCondition { bound: usize, length: usize },
    #[error("conditions use only '0' and '1', found {found:?}")]
    BadBit { found: char },
    #[error("requirement syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
}

// ---------------------------------------------------------------------------
// Conditions
// ---------------------------------------------------------------------------

/// A finite binary string, read as a partial characteristic function: bit
/// `i` decides membership of `i`, positions past the end are undecided.
/// A condition extends another when its bits start with the other's.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Condition {
    bits: Vec<bool>,
}

impl Condition {
    pub fn empty() -> Self {
        Condition { bits: Vec::new() }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Condition { bits }
    }

    /// Parses a string of `0`s and `1`s; the empty string is the empty
    /// condition.
    pub fn parse(text: &str) -> Result<Self, ForcingError> {
        text.chars()
            .map(|ch| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                found => Err(ForcingError::BadBit { found }),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Condition::from_bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Prefix extension: every position `other` decides, `self` decides
    /// the same way.
    pub fn extends(&self, other: &Condition) -> bool {
        self.bits.len() >= other.bits.len() && self.bits[..other.bits.len()] == other.bits[..]
    }

    /// The decided bits of row `row` under the pairing identification.
    /// Cantor pairing is strictly increasing in the position argument, so
    /// the decided positions of a row form an initial segment; everything
    /// past the returned vector is undecided.
    pub fn section(&self, row: usize) -> Vec<bool> {
        (0..).map_while(|pos| self.section_bit(row, pos)).collect()
    }

    /// The bit at `(row, pos)` of the plane coding, if decided.
    pub fn section_bit(&self, row: usize, pos: usize) -> Option<bool> {
        let index = usize::try_from(pair_u64(row as u64, pos as u64)).ok()?;
        self.bits.get(index).copied()
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

impl Serialize for Condition {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Condition {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Condition::parse(&text).map_err(D::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Requirements
// ---------------------------------------------------------------------------

/// A decidable predicate on finite binary strings, written in a small
/// expression language:
///
/// ```text
/// expr  := or
/// or    := and ('|' and)*
/// and   := unary ('&' unary)*
/// unary := '!' unary | atom
/// atom  := '(' expr ')' | 'always' | 'never'
///        | 'contains' bits | 'prefix' bits | 'len' number
///        | 'bit' number '=' 0|1 | 'parity' ('even'|'odd')
///        | 'section' row pos '=' 0|1
/// ```
///
/// `contains`/`prefix` take a nonempty pattern of `0`s and `1`s; `len n`
/// holds when the string has at least `n` bits; `bit k = v` holds when
/// position `k` is decided and equal to `v`; `parity` constrains the
/// count of ones; `section r p = v` reads position `p` of row `r` through
/// the pairing identification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReqExpr {
    Always,
    Never,
    Contains(Vec<bool>),
    Prefix(Vec<bool>),
    LengthGe(usize),
    Bit(usize, bool),
    /// Holds when the count of ones is odd (`true`) or even (`false`).
    Parity(bool),
    SectionBit {
        row: usize,
        pos: usize,
        value: bool,
    },
    Not(Box<ReqExpr>),
    And(Box<ReqExpr>, Box<ReqExpr>),
    Or(Box<ReqExpr>, Box<ReqExpr>),
}

impl ReqExpr {
    pub fn holds(&self, bits: &[bool]) -> bool {
        match self {
            ReqExpr::Always => true,
            ReqExpr::Never => false,
            ReqExpr::Contains(p) => bits.windows(p.len()).any(|w| w == &p[..]),
            ReqExpr::Prefix(p) => bits.len() >= p.len() && bits[..p.len()] == p[..],
            ReqExpr::LengthGe(n) => bits.len() >= *n,
            ReqExpr::Bit(k, v) => bits.get(*k) == Some(v),
            ReqExpr::Parity(odd) => (bits.iter().filter(|&&b| b).count() % 2 == 1) == *odd,
            ReqExpr::SectionBit { row, pos, value } => {
                let index = pair_u64(*row as u64, *pos as u64);
                usize::try_from(index).ok().and_then(|i| bits.get(i)) == Some(value)
            }
            ReqExpr::Not(e) => !e.holds(bits),
            ReqExpr::And(a, b) => a.holds(bits) && b.holds(bits),
            ReqExpr::Or(a, b) => a.holds(bits) || b.holds(bits),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            ReqExpr::Or(..) => 0,
            ReqExpr::And(..) => 1,
            ReqExpr::Not(..) => 2,
            _ => 3,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let paren = self.precedence() < min;
        if paren {
            write!(f, "(")?;
        }
        match self {
            ReqExpr::Always => write!(f, "always")?,
            ReqExpr::Never => write!(f, "never")?,
            ReqExpr::Contains(p) => write!(f, "contains {}", pattern_text(p))?,
            ReqExpr::Prefix(p) => write!(f, "prefix {}", pattern_text(p))?,
            ReqExpr::LengthGe(n) => write!(f, "len {n}")?,
            ReqExpr::Bit(k, v) => write!(f, "bit {k} = {}", u8::from(*v))?,
            ReqExpr::Parity(odd) => write!(f, "parity {}", if *odd { "odd" } else { "even" })?,
            ReqExpr::SectionBit { row, pos, value } => {
                write!(f, "section {row} {pos} = {}", u8::from(*value))?
            }
            ReqExpr::Not(e) => {
                write!(f, "!")?;
                e.fmt_at(f, 3)?;
            }
            ReqExpr::And(a, b) => {
                a.fmt_at(f, 1)?;
                write!(f, " & ")?;
                b.fmt_at(f, 2)?;
            }
            ReqExpr::Or(a, b) => {
                a.fmt_at(f, 0)?;
                write!(f, " | ")?;
                b.fmt_at(f, 1)?;
            }
        }
        if paren {
            write!(f, ")")?;
        }
        Ok(())
    }
}

fn pattern_text(p: &[bool]) -> String {
    p.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

impl fmt::Display for ReqExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

impl From<ReqExpr> for String {
    fn from(e: ReqExpr) -> String {
        e.to_string()
    }
}

impl TryFrom<String> for ReqExpr {
    type Error = ForcingError;

    fn try_from(text: String) -> Result<Self, ForcingError> {
        parse_req_expr(&text)
    }
}

/// A labeled requirement. `dense_hint` is advisory: the caller's claim
/// that every condition has an extension satisfying the expression, which
/// report consumers may spot-check but the engine never assumes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requirement {
    pub label: String,
    #[serde(with = "req_expr_text")]
    pub expr: ReqExpr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense_hint: Option<bool>,
}

mod req_expr_text {
    use super::*;

    pub fn serialize<S: Serializer>(e: &ReqExpr, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&e.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ReqExpr, D::Error> {
        let text = String::deserialize(d)?;
        parse_req_expr(&text).map_err(D::Error::custom)
    }
}

impl Requirement {
    pub fn new(label: impl Into<String>, expr: ReqExpr) -> Self {
        Requirement {
            label: label.into(),
            expr,
            dense_hint: None,
        }
    }

    pub fn parse(label: impl Into<String>, text: &str) -> Result<Self, ForcingError> {
        Ok(Requirement::new(label, parse_req_expr(text)?))
    }

    pub fn with_dense_hint(mut self, dense: bool) -> Self {
        self.dense_hint = Some(dense);
        self
    }

    pub fn member(&self, bits: &[bool]) -> bool {
        self.expr.holds(bits)
    }
}

// ---------------------------------------------------------------------------
// Expression parser
// ---------------------------------------------------------------------------

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: impl Into<String>) -> ForcingError {
        ForcingError::Syntax {
            position: self.pos,
            message: message.into(),
        }
    }

    fn skip_space(&mut self) {
        while self.text.get(self.pos).is_some_and(u8::is_ascii_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_space();
        self.text.get(self.pos).copied()
    }

    fn eat(&mut self, ch: u8) -> bool {
        if self.peek() == Some(ch) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn word(&mut self) -> Option<&'a str> {
        self.skip_space();
        let start = self.pos;
        while self.text.get(self.pos).is_some_and(u8::is_ascii_lowercase) {
            self.pos += 1;
        }
        (self.pos > start).then(|| std::str::from_utf8(&self.text[start..self.pos]).unwrap())
    }

    fn digits(&mut self) -> Result<&'a str, ForcingError> {
        self.skip_space();
        let start = self.pos;
        while self.text.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.error("expected digits"));
        }
        Ok(std::str::from_utf8(&self.text[start..self.pos]).unwrap())
    }

    fn number(&mut self) -> Result<usize, ForcingError> {
        let digits = self.digits()?;
        digits
            .parse()
            .map_err(|_| self.error(format!("number {digits} too large")))
    }

    fn pattern(&mut self) -> Result<Vec<bool>, ForcingError> {
        let digits = self.digits()?;
        digits
            .bytes()
            .map(|b| match b {
                b'0' => Ok(false),
                b'1' => Ok(true),
                other => {
                    Err(self.error(format!("pattern digit {:?} is not 0 or 1", other as char)))
                }
            })
            .collect()
    }

    fn single_bit(&mut self) -> Result<bool, ForcingError> {
        if !self.eat(b'=') {
            return Err(self.error("expected '='"));
        }
        match self.digits()? {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(self.error(format!("expected 0 or 1, found {other}"))),
        }
    }

    fn or(&mut self) -> Result<ReqExpr, ForcingError> {
        let mut left = self.and()?;
        while self.eat(b'|') {
            left = ReqExpr::Or(Box::new(left), Box::new(self.and()?));
        }
        Ok(left)
    }

    fn and(&mut self) -> Result<ReqExpr, ForcingError> {
        let mut left = self.unary()?;
        while self.eat(b'&') {
            left = ReqExpr::And(Box::new(left), Box::new(self.unary()?));
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<ReqExpr, ForcingError> {
        if self.eat(b'!') {
            return Ok(ReqExpr::Not(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<ReqExpr, ForcingError> {
        if self.eat(b'(') {
            let inner = self.or()?;
            if !self.eat(b')') {
                return Err(self.error("expected ')'"));
            }
            return Ok(inner);
        }
        match self.word() {
            Some("always") => Ok(ReqExpr::Always),
            Some("never") => Ok(ReqExpr::Never),
            Some("contains") => Ok(ReqExpr::Contains(self.pattern()?)),
            Some("prefix") => Ok(ReqExpr::Prefix(self.pattern()?)),
            Some("len") => Ok(ReqExpr::LengthGe(self.number()?)),
            Some("bit") => {
                let k = self.number()?;
                Ok(ReqExpr::Bit(k, self.single_bit()?))
            }
            Some("parity") => match self.word() {
                Some("even") => Ok(ReqExpr::Parity(false)),
                Some("odd") => Ok(ReqExpr::Parity(true)),
                other => Err(self.error(format!("expected even or odd, found {other:?}"))),
            },
            Some("section") => {
                let row = self.number()?;
                let pos = self.number()?;
                Ok(ReqExpr::SectionBit {
                    row,
                    pos,
                    value: self.single_bit()?,
                })
            }
            Some(other) => Err(self.error(format!("unknown requirement {other:?}"))),
            None => Err(self.error("expected a requirement expression")),
        }
    }
}

pub fn parse_req_expr(text: &str) -> Result<ReqExpr, ForcingError> {
    let mut parser = Parser {
        text: text.as_bytes(),
        pos: 0,
    };
    let expr = parser.or()?;
    if parser.peek().is_some() {
        return Err(parser.error("trailing input"));
    }
    Ok(expr)
}

// ---------------------------------------------------------------------------
// The meeting engine
// ---------------------------------------------------------------------------

/// How a requirement fared against the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeetStatus {
    /// Met: the condition's first `prefix_len` bits satisfy the
    /// requirement.
    Met { prefix_len: usize },
    /// Sealed to the bound: exhaustive search showed no extension of the
    /// condition's first `prefix_len` bits up to the length bound lies in
    /// the requirement. A genuine no-extension fact would need more than
    /// finite search; this certifies the bound only.
    Sealed { prefix_len: usize },
    /// The node budget ran out before the search was exhaustive; nothing
    /// is claimed.
    Exhausted { explored: usize },
}

/// Breadth-first search, children in `0`-then-`1` order, for the shortest
/// (then lexicographically least) extension of `c` satisfying `r`, trying
/// lengths up to `bound`. Returns the extension and where it was met, or
/// `c` unchanged with [`MeetStatus::Sealed`] after exhausting every
/// extension, or [`MeetStatus::Exhausted`] if the default node budget ran
/// out first.
pub fn extend_to_meet(
    c: &Condition,
    r: &Requirement,
    bound: usize,
) -> Result<(Condition, MeetStatus), ForcingError> {
    extend_to_meet_within(c, r, bound, DEFAULT_NODE_BUDGET)
}

/// [`extend_to_meet`] with an explicit node budget.
pub fn extend_to_meet_within(
    c: &Condition,
    r: &Requirement,
    bound: usize,
    node_budget: usize,
) -> Result<(Condition, MeetStatus), ForcingError> {
    if bound < c.len() {
        return Err(ForcingError::BoundBelowCondition {
            bound,
            length: c.len(),
        });
    }
    // Suffixes pack into a u64: reaching depth d costs 2^d explored
    // nodes, and the budget is clamped well below 2^63.
    let node_budget = node_budget.min(1 << 40);
    let mut explored = 0usize;
    let mut queue: VecDeque<(u64, usize)> = VecDeque::from([(0, 0)]);
    let mut candidate = c.bits().to_vec();
    while let Some((suffix, depth)) = queue.pop_front() {
        if explored == node_budget {
            return Ok((c.clone(), MeetStatus::Exhausted { explored }));
        }
        explored += 1;
        candidate.truncate(c.len());
        candidate.extend((0..depth).map(|i| suffix >> i & 1 == 1));
        if r.member(&candidate) {
            let len = candidate.len();
            return Ok((
                Condition::from_bits(candidate),
                MeetStatus::Met { prefix_len: len },
            ));
        }
        if c.len() + depth < bound {
            queue.push_back((suffix, depth + 1));
            queue.push_back((suffix | 1 << depth, depth + 1));
        }
    }
    Ok((
        c.clone(),
        MeetStatus::Sealed {
            prefix_len: c.len(),
        },
    ))
}

/// Meets the requirements in order, threading the condition: each stage
/// extends the previous stage's condition, so the final condition extends
/// every intermediate one and every `Met` prefix survives into it.
/// Deterministic in the input list and bound.
pub fn run_construction(
    reqs: &[Requirement],
    bound: usize,
) -> Result<(Condition, Vec<MeetStatus>), ForcingError> {
    let mut condition = Condition::empty();
    let mut statuses = Vec::with_capacity(reqs.len());
    for r in reqs {
        let (next, status) = extend_to_meet(&condition, r, bound)?;
        condition = next;
        statuses.push(status);
    }
    Ok((condition, statuses))
}

/// Independently re-checks a status against the final condition: `Met` by
/// direct membership of the recorded initial segment, `Sealed` by
/// re-running the exhaustive search from the recorded prefix (sound for
/// the final condition too, since it extends that prefix), `Exhausted`
/// vacuously.
pub fn verify_status(
    condition: &Condition,
    r: &Requirement,
    status: &MeetStatus,
    bound: usize,
) -> bool {
    match *status {
        MeetStatus::Met { prefix_len } => {
            prefix_len <= condition.len() && r.member(&condition.bits()[..prefix_len])
        }
        MeetStatus::Sealed { prefix_len } => {
            if prefix_len > condition.len() {
                return false;
            }
            let stage = Condition::from_bits(condition.bits()[..prefix_len].to_vec());
            matches!(
                extend_to_meet(&stage, r, bound),
                Ok((_, MeetStatus::Sealed { .. }))
            )
        }
        MeetStatus::Exhausted { .. } => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn req(text: &str) -> Requirement {
        Requirement::parse(text, text).unwrap()
    }

    #[test]
    fn shortest_extension_containing_a_pattern() {
        let (c, status) = extend_to_meet(&Condition::empty(), &req("contains 11"), 8).unwrap();
        assert_eq!(c.to_string(), "11");
        assert_eq!(status, MeetStatus::Met { prefix_len: 2 });
    }

    #[test]
    fn prefix_requirements_seal_on_the_wrong_root() {
        let zero_rooted = Condition::parse("0").unwrap();
        let (c, status) = extend_to_meet(&zero_rooted, &req("prefix 1"), 6).unwrap();
        assert_eq!(c, zero_rooted);
        assert_eq!(status, MeetStatus::Sealed { prefix_len: 1 });

        let (c, status) = extend_to_meet(&Condition::empty(), &req("prefix 1"), 6).unwrap();
        assert_eq!(c.to_string(), "1");
        assert_eq!(status, MeetStatus::Met { prefix_len: 1 });
    }

    #[test]
    fn the_empty_requirement_seals_after_exhaustive_search() {
        let (c, status) = extend_to_meet(&Condition::empty(), &req("never"), 10).unwrap();
        assert!(c.is_empty());
        assert_eq!(status, MeetStatus::Sealed { prefix_len: 0 });
    }

    #[test]
    fn a_tight_node_budget_reports_exhausted() {
        let r = req("never");
        let (c, status) = extend_to_meet_within(&Condition::empty(), &r, 30, 100).unwrap();
        assert!(c.is_empty());
        assert_eq!(status, MeetStatus::Exhausted { explored: 100 });
        assert!(verify_status(&c, &r, &status, 30));
    }

    #[test]
    fn bound_below_the_condition_is_rejected() {
        let c = Condition::parse("0101").unwrap();
        let err = extend_to_meet(&c, &req("always"), 3).unwrap_err();
        assert_eq!(
            err,
            ForcingError::BoundBelowCondition {
                bound: 3,
                length: 4
            }
        );
    }

    #[test]
    fn all_three_bit_patterns_are_met_and_reverified() {
        let reqs: Vec<Requirement> = (0..8u8)
            .map(|p| {
                let bits: String = (0..3)
                    .rev()
                    .map(|i| if p >> i & 1 == 1 { '1' } else { '0' })
                    .collect();
                Requirement::parse(format!("p{p}"), &format!("contains {bits}"))
                    .unwrap()
                    .with_dense_hint(true)
            })
            .collect();
        let (final_c, statuses) = run_construction(&reqs, 40).unwrap();
        for (r, status) in reqs.iter().zip(&statuses) {
            assert!(
                matches!(status, MeetStatus::Met { .. }),
                "{}: {status:?}",
                r.label
            );
            assert!(
                verify_status(&final_c, r, status, 40),
                "{} fails re-check",
                r.label
            );
            assert!(r.member(final_c.bits()));
        }
    }

    #[test]
    fn construction_threads_monotonically() {
        let reqs = vec![
            req("contains 101"),
            req("parity odd"),
            req("len 9"),
            req("contains 0011"),
        ];
        let (final_c, statuses) = run_construction(&reqs, 24).unwrap();
        // Replay the stages and check each intermediate is extended.
        let mut stage = Condition::empty();
        for (r, status) in reqs.iter().zip(&statuses) {
            let (next, replayed) = extend_to_meet(&stage, r, 24).unwrap();
            assert_eq!(replayed, *status);
            assert!(next.extends(&stage));
            stage = next;
        }
        assert_eq!(stage, final_c);
    }

    #[test]
    fn contradictory_pair_meets_then_seals() {
        let reqs = vec![req("prefix 0"), req("prefix 1")];
        let (final_c, statuses) = run_construction(&reqs, 12).unwrap();
        assert_eq!(statuses[0], MeetStatus::Met { prefix_len: 1 });
        assert_eq!(statuses[1], MeetStatus::Sealed { prefix_len: 1 });
        assert!(verify_status(&final_c, &reqs[1], &statuses[1], 12));
        assert_eq!(final_c.to_string(), "0");
    }

    #[test]
    fn empty_construction_is_empty() {
        let (c, statuses) = run_construction(&[], 10).unwrap();
        assert!(c.is_empty());
        assert!(statuses.is_empty());
    }

    #[test]
    fn sections_read_the_pairing_plane() {
        assert!(Condition::empty().section(0).is_empty());
        assert_eq!(Condition::empty().section_bit(0, 0), None);

        let index = usize::try_from(pair_u64(2, 5)).unwrap();
        let mut bits = vec![false; index + 1];
        bits[index] = true;
        let c = Condition::from_bits(bits);
        assert_eq!(c.section_bit(2, 5), Some(true));
        assert_eq!(c.section(2).get(5), Some(&true));

        // Rows are disjoint reads: row 1 bits never show up in row 2.
        for k in 0..6 {
            let i = usize::try_from(pair_u64(1, k)).unwrap();
            let mut other = c.clone();
            if i < other.bits.len() {
                other.bits[i] = true;
                assert_eq!(other.section(2), c.section(2));
            }
        }
        // A section's decided positions are an initial segment.
        let section = c.section(2);
        assert_eq!(section.len(), 6);
        assert!(section[..5].iter().all(|&b| !b));
    }

    #[test]
    fn requirement_language_round_trips_and_binds_tightly() {
        for text in [
            "always",
            "never",
            "contains 0110",
            "prefix 1",
            "len 7",
            "bit 3 = 1",
            "parity even",
            "section 2 5 = 1",
            "!prefix 0",
            "prefix 1 | prefix 0 & len 3",
            "(prefix 1 | prefix 0) & len 3",
            "!(parity odd | bit 0 = 1)",
        ] {
            let expr = parse_req_expr(text).unwrap();
            assert_eq!(parse_req_expr(&expr.to_string()).unwrap(), expr, "{text}");
        }

        // '&' binds tighter than '|'.
        let expr = parse_req_expr("prefix 1 | prefix 0 & len 3").unwrap();
        assert!(matches!(expr, ReqExpr::Or(..)));
        assert!(expr.holds(&[true]));
        assert!(!expr.holds(&[false, true]));
        assert!(expr.holds(&[false, true, true]));

        assert!(parse_req_expr("contains 21").is_err());
        assert!(parse_req_expr("prefix").is_err());
        assert!(parse_req_expr("bit 3 = 2").is_err());
        assert!(parse_req_expr("len 5 extra").is_err());
        assert!(parse_req_expr("(prefix 1").is_err());
    }

    #[test]
    fn conditions_and_requirements_serialize_as_text() {
        let c = Condition::parse("0101").unwrap();
        assert_eq!(serde_json::to_string(&c).unwrap(), "\"0101\"");
        assert_eq!(serde_json::from_str::<Condition>("\"0101\"").unwrap(), c);
        assert!(serde_json::from_str::<Condition>("\"012\"").is_err());

        let r = req("contains 11 & parity odd").with_dense_hint(true);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("contains 11 & parity odd"));
        assert_eq!(serde_json::from_str::<Requirement>(&json).unwrap(), r);

        let status = MeetStatus::Met { prefix_len: 4 };
        let json = serde_json::to_string(&status).unwrap();
        assert_eq!(serde_json::from_str::<MeetStatus>(&json).unwrap(), status);
    }

    #[test]
    fn construction_is_deterministic() {
        let reqs = vec![
            req("contains 110"),
            req("parity even"),
            req("section 1 2 = 1"),
        ];
        let a = run_construction(&reqs, 30).unwrap();
        let b = run_construction(&reqs, 30).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            serde_json::to_string(&a.0).unwrap(),
            serde_json::to_string(&b.0).unwrap()
        );
    }

    fn brute_least_extension(c: &Condition, r: &Requirement, bound: usize) -> Option<Vec<bool>> {
        // Shortest-then-lex enumeration by counting through each length.
        for len in c.len()..=bound {
            let extra = len - c.len();
            for pattern in 0u64..1 << extra {
                let mut bits = c.bits().to_vec();
                // Counting upward visits suffixes in lex order when the
                // first appended bit is the highest digit.
                bits.extend((0..extra).rev().map(|i| pattern >> i & 1 == 1));
                if r.member(&bits) {
                    return Some(bits);
                }
            }
        }
        None
    }

    fn arb_expr() -> impl Strategy<Value = ReqExpr> {
        let leaf = prop_oneof![
            Just(ReqExpr::Always),
            Just(ReqExpr::Never),
            proptest::collection::vec(any::<bool>(), 1..4).prop_map(ReqExpr::Contains),
            proptest::collection::vec(any::<bool>(), 1..4).prop_map(ReqExpr::Prefix),
            (0usize..8).prop_map(ReqExpr::LengthGe),
            (0usize..6, any::<bool>()).prop_map(|(k, v)| ReqExpr::Bit(k, v)),
            any::<bool>().prop_map(ReqExpr::Parity),
        ];
        leaf.prop_recursive(2, 8, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| ReqExpr::Not(Box::new(e))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| ReqExpr::And(Box::new(a), Box::new(b))),
                (inner.clone(), inner).prop_map(|(a, b)| ReqExpr::Or(Box::new(a), Box::new(b))),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]

        #[test]
        fn search_agrees_with_brute_enumeration(
            expr in arb_expr(),
            start in proptest::collection::vec(any::<bool>(), 0..4),
            extra in 0usize..5,
        ) {
            let c = Condition::from_bits(start);
            let bound = c.len() + extra;
            let r = Requirement::new("prop", expr);
            let (found, status) = extend_to_meet(&c, &r, bound).unwrap();
            match status {
                MeetStatus::Met { prefix_len } => {
                    let brute = brute_least_extension(&c, &r, bound).expect("brute agrees");
                    prop_assert_eq!(found.bits(), &brute[..]);
                    prop_assert_eq!(prefix_len, found.len());
                    prop_assert!(r.member(found.bits()));
                    prop_assert!(found.extends(&c));
                }
                MeetStatus::Sealed { prefix_len } => {
                    prop_assert_eq!(brute_least_extension(&c, &r, bound), None);
                    prop_assert_eq!(found.clone(), c.clone());
                    prop_assert_eq!(prefix_len, c.len());
                }
                MeetStatus::Exhausted { .. } => prop_assert!(false, "budget is ample here"),
            }
            prop_assert!(verify_status(&found, &r, &status, bound));
            let round = parse_req_expr(&r.expr.to_string()).unwrap();
            prop_assert_eq!(round, r.expr);
        }
    }
}
