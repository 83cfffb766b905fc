use std::fmt;

use super::elements;
use super::{Atom, Bond, BondDir, BondOrder, Chirality, MolGraph, Neighbor};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Empty,
    UnexpectedByte(u8),
    UnknownElement,
    UnbalancedParenthesis,
    EmptyBranch,
    UnclosedRing(u32),
    SelfBond,
    DuplicateBond,
    ConflictingRingBond,
    InvalidCharge,
    UnsupportedChirality,
    UnsupportedBond,
    MisplacedBond,
    MisplacedDot,
    UnterminatedBracket,
    AromaticNotAllowed,
    NumberTooLarge,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Empty => write!(f, "empty SMILES"),
            ParseErrorKind::UnexpectedByte(b) if b.is_ascii_graphic() => {
                write!(f, "unexpected character '{}'", *b as char)
            }
            ParseErrorKind::UnexpectedByte(b) => write!(f, "unexpected byte 0x{b:02x}"),
            ParseErrorKind::UnknownElement => write!(f, "unknown element"),
            ParseErrorKind::UnbalancedParenthesis => write!(f, "unbalanced parenthesis"),
            ParseErrorKind::EmptyBranch => write!(f, "empty branch"),
            ParseErrorKind::UnclosedRing(n) => write!(f, "ring bond {n} is never closed"),
            ParseErrorKind::SelfBond => write!(f, "ring bond closes on its own atom"),
            ParseErrorKind::DuplicateBond => write!(f, "duplicate bond"),
            ParseErrorKind::ConflictingRingBond => write!(f, "ring bond orders disagree"),
            ParseErrorKind::InvalidCharge => write!(f, "invalid charge"),
            ParseErrorKind::UnsupportedChirality => write!(f, "unsupported chirality class"),
            ParseErrorKind::UnsupportedBond => write!(f, "unsupported bond symbol"),
            ParseErrorKind::MisplacedBond => write!(f, "bond symbol not between two atoms"),
            ParseErrorKind::MisplacedDot => write!(f, "misplaced '.'"),
            ParseErrorKind::UnterminatedBracket => write!(f, "unterminated bracket atom"),
            ParseErrorKind::AromaticNotAllowed => write!(f, "element cannot be aromatic"),
            ParseErrorKind::NumberTooLarge => write!(f, "number too large"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind} at byte {offset}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

fn err<T>(offset: usize, kind: ParseErrorKind) -> Result<T, ParseError> {
    Err(ParseError { offset, kind })
}

#[derive(Clone, Copy)]
struct PendingBond {
    order: BondOrder,
    dir: Option<BondDir>,
    offset: usize,
}

struct RingOpen {
    atom: usize,
    bond: Option<PendingBond>,
    slot: usize,
    offset: usize,
}

const RING_PLACEHOLDER: usize = usize::MAX;

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    order: Vec<Vec<Neighbor>>,
}

pub(crate) fn parse_bytes(s: &[u8]) -> Result<MolGraph, ParseError> {
    if s.is_empty() {
        return err(0, ParseErrorKind::Empty);
    }
    let mut p = Parser {
        s,
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
        order: Vec::new(),
    };
    p.run()?;
    let Parser { mut atoms, bonds, order, .. } = p;
    for (atom, order) in atoms.iter_mut().zip(order) {
        if let Some(ch) = atom.chirality.as_mut() {
            ch.order = order;
        }
    }
    let mut g = MolGraph { atoms, bonds, components: 0 };
    g.components = g.component_ids().iter().max().map_or(0, |m| m + 1);
    Ok(g)
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn run(&mut self) -> Result<(), ParseError> {
        let mut prev: Option<usize> = None;
        let mut branches: Vec<(usize, usize)> = Vec::new(); // (atom, offset of '(')
        let mut branch_empty = false;
        let mut pending: Option<PendingBond> = None;
        let mut rings: Vec<(u32, RingOpen)> = Vec::new();
        let mut after_dot = false;

        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                b'(' => {
                    let Some(p) = prev else {
                        return err(start, ParseErrorKind::UnbalancedParenthesis);
                    };
                    if pending.is_some() {
                        return err(start, ParseErrorKind::MisplacedBond);
                    }
                    branches.push((p, start));
                    branch_empty = true;
                    self.pos += 1;
                }
                b')' => {
                    if pending.is_some() {
                        return err(start, ParseErrorKind::MisplacedBond);
                    }
                    let Some((p, _)) = branches.pop() else {
                        return err(start, ParseErrorKind::UnbalancedParenthesis);
                    };
                    if branch_empty {
                        return err(start, ParseErrorKind::EmptyBranch);
                    }
                    prev = Some(p);
                    self.pos += 1;
                }
                b'.' => {
                    if pending.is_some() || prev.is_none() || !branches.is_empty() {
                        return err(start, ParseErrorKind::MisplacedDot);
                    }
                    prev = None;
                    after_dot = true;
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' | b'$' => {
                    if pending.is_some() || prev.is_none() {
                        return err(start, ParseErrorKind::MisplacedBond);
                    }
                    let (order, dir) = match c {
                        b'-' => (BondOrder::Single, None),
                        b'=' => (BondOrder::Double, None),
                        b'#' => (BondOrder::Triple, None),
                        b':' => (BondOrder::Aromatic, None),
                        b'/' => (BondOrder::Single, Some(BondDir::Up)),
                        b'\\' => (BondOrder::Single, Some(BondDir::Down)),
                        _ => return err(start, ParseErrorKind::UnsupportedBond),
                    };
                    pending = Some(PendingBond { order, dir, offset: start });
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => {
                    let Some(p) = prev else {
                        return err(start, ParseErrorKind::UnexpectedByte(c));
                    };
                    let num = self.ring_number()?;
                    let bond = pending.take();
                    if let Some(i) = rings.iter().position(|r| r.0 == num) {
                        let (_, open) = rings.swap_remove(i);
                        self.close_ring(open, p, bond, start)?;
                    } else {
                        let slot = self.order[p].len();
                        self.order[p].push(Neighbor::Atom(RING_PLACEHOLDER));
                        rings.push((num, RingOpen { atom: p, bond, slot, offset: start }));
                    }
                    branch_empty = false;
                }
                _ => {
                    let atom = self.atom()?;
                    let idx = self.atoms.len();
                    let has_h = atom.hydrogens > 0;
                    self.atoms.push(atom);
                    self.order.push(Vec::new());
                    if let Some(p) = prev {
                        self.order[idx].push(Neighbor::Atom(p));
                    }
                    if has_h {
                        self.order[idx].push(Neighbor::ImplicitH);
                    }
                    if let Some(p) = prev {
                        let bond = pending.take();
                        self.add_bond(p, idx, bond, start)?;
                        self.order[p].push(Neighbor::Atom(idx));
                    }
                    prev = Some(idx);
                    branch_empty = false;
                    after_dot = false;
                }
            }
        }

        if let Some(b) = pending {
            return err(b.offset, ParseErrorKind::MisplacedBond);
        }
        if let Some(&(_, off)) = branches.last() {
            return err(off, ParseErrorKind::UnbalancedParenthesis);
        }
        if let Some((num, open)) = rings.iter().min_by_key(|(_, o)| o.offset).map(|(n, o)| (n, o)) {
            return err(open.offset, ParseErrorKind::UnclosedRing(*num));
        }
        if after_dot {
            return err(self.s.len() - 1, ParseErrorKind::MisplacedDot);
        }
        Ok(())
    }

    fn ring_number(&mut self) -> Result<u32, ParseError> {
        let start = self.pos;
        if self.peek() == Some(b'%') {
            self.pos += 1;
            let digits = self.s.get(self.pos..self.pos + 2);
            match digits {
                Some(&[a, b]) if a.is_ascii_digit() && b.is_ascii_digit() => {
                    self.pos += 2;
                    Ok(((a - b'0') * 10 + (b - b'0')) as u32)
                }
                _ => err(start, ParseErrorKind::UnexpectedByte(b'%')),
            }
        } else {
            let d = self.s[self.pos] - b'0';
            self.pos += 1;
            Ok(d as u32)
        }
    }

    fn implicit_order(&self, a: usize, b: usize) -> BondOrder {
        if self.atoms[a].aromatic && self.atoms[b].aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        }
    }

    fn add_bond(&mut self, a: usize, b: usize, bond: Option<PendingBond>, offset: usize) -> Result<(), ParseError> {
        if a == b {
            return err(offset, ParseErrorKind::SelfBond);
        }
        let (order, dir) = match bond {
            Some(p) => (p.order, p.dir),
            None => (self.implicit_order(a, b), None),
        };
        self.bonds.push(Bond { a, b, order, dir });
        Ok(())
    }

    fn close_ring(&mut self, open: RingOpen, closer: usize, bond: Option<PendingBond>, offset: usize) -> Result<(), ParseError> {
        if open.atom == closer {
            return err(offset, ParseErrorKind::SelfBond);
        }
        // chain bonds always reach a new atom, so only closures can repeat one
        if self.order[closer].contains(&Neighbor::Atom(open.atom)) {
            return err(offset, ParseErrorKind::DuplicateBond);
        }
        let spec = match (open.bond, bond) {
            (Some(x), Some(y)) => {
                if x.order != y.order {
                    return err(offset, ParseErrorKind::ConflictingRingBond);
                }
                Some((x, false))
            }
            (Some(x), None) => Some((x, false)),
            (None, Some(y)) => Some((y, true)),
            (None, None) => None,
        };
        match spec {
            // a symbol written at the closing digit reads from the closer
            Some((p, true)) => self.add_bond(closer, open.atom, Some(p), offset)?,
            Some((p, false)) => self.add_bond(open.atom, closer, Some(p), offset)?,
            None => self.add_bond(open.atom, closer, None, offset)?,
        }
        self.order[open.atom][open.slot] = Neighbor::Atom(closer);
        self.order[closer].push(Neighbor::Atom(open.atom));
        Ok(())
    }

    fn number(&mut self, max: u32) -> Result<Option<u32>, ParseError> {
        let start = self.pos;
        let mut v: u64 = 0;
        let mut any = false;
        while let Some(c @ b'0'..=b'9') = self.peek() {
            v = v * 10 + (c - b'0') as u64;
            if v > max as u64 {
                return err(start, ParseErrorKind::NumberTooLarge);
            }
            any = true;
            self.pos += 1;
        }
        Ok(any.then_some(v as u32))
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let start = self.pos;
        let c = self.s[self.pos];
        if c == b'[' {
            return self.bracket_atom();
        }
        let (element, aromatic, len) = match c {
            b'C' if self.s.get(start + 1) == Some(&b'l') => ("Cl", false, 2),
            b'B' if self.s.get(start + 1) == Some(&b'r') => ("Br", false, 2),
            b'*' => ("*", false, 1),
            b'B' => ("B", false, 1),
            b'C' => ("C", false, 1),
            b'N' => ("N", false, 1),
            b'O' => ("O", false, 1),
            b'P' => ("P", false, 1),
            b'S' => ("S", false, 1),
            b'F' => ("F", false, 1),
            b'I' => ("I", false, 1),
            b'b' => ("B", true, 1),
            b'c' => ("C", true, 1),
            b'n' => ("N", true, 1),
            b'o' => ("O", true, 1),
            b'p' => ("P", true, 1),
            b's' => ("S", true, 1),
            _ if c.is_ascii_alphabetic() => return err(start, ParseErrorKind::UnknownElement),
            _ => return err(start, ParseErrorKind::UnexpectedByte(c)),
        };
        self.pos += len;
        Ok(Atom {
            element,
            charge: 0,
            hydrogens: 0,
            aromatic,
            isotope: None,
            bracket: false,
            chirality: None,
        })
    }

    fn bracket_atom(&mut self) -> Result<Atom, ParseError> {
        let open = self.pos;
        self.pos += 1;
        let isotope = self.number(999)?.map(|v| v as u16);

        let sym_start = self.pos;
        let Some(c) = self.peek() else {
            return err(open, ParseErrorKind::UnterminatedBracket);
        };
        let (element, aromatic) = if c == b'*' {
            self.pos += 1;
            ("*", false)
        } else if c.is_ascii_uppercase() {
            let two = self.s.get(self.pos..self.pos + 2).filter(|t| t[1].is_ascii_lowercase());
            if let Some(sym) = two.and_then(elements::lookup) {
                self.pos += 2;
                (sym, false)
            } else if let Some(sym) = elements::lookup(&self.s[self.pos..self.pos + 1]) {
                self.pos += 1;
                (sym, false)
            } else {
                return err(sym_start, ParseErrorKind::UnknownElement);
            }
        } else if c.is_ascii_lowercase() {
            let two = self.s.get(self.pos..self.pos + 2);
            let cap = |t: &[u8]| -> Vec<u8> {
                let mut v = t.to_vec();
                v[0] = v[0].to_ascii_uppercase();
                v
            };
            let two_sym = two
                .filter(|t| matches!(*t, b"se" | b"as" | b"te"))
                .and_then(|t| elements::lookup(&cap(t)));
            if let Some(sym) = two_sym {
                self.pos += 2;
                (sym, true)
            } else {
                let sym = elements::lookup(&cap(&self.s[self.pos..self.pos + 1]))
                    .ok_or(ParseError { offset: sym_start, kind: ParseErrorKind::UnknownElement })?;
                if !elements::aromatic_allowed(sym) {
                    return err(sym_start, ParseErrorKind::AromaticNotAllowed);
                }
                self.pos += 1;
                (sym, true)
            }
        } else if c == b']' {
            return err(sym_start, ParseErrorKind::UnknownElement);
        } else {
            return err(sym_start, ParseErrorKind::UnexpectedByte(c));
        };

        let mut chirality = None;
        if self.peek() == Some(b'@') {
            let ch_start = self.pos;
            self.pos += 1;
            let mut clockwise = false;
            if self.peek() == Some(b'@') {
                self.pos += 1;
                clockwise = true;
            } else if self.s.get(self.pos..self.pos + 2) == Some(b"TH") {
                self.pos += 2;
                match self.peek() {
                    Some(b'1') => clockwise = false,
                    Some(b'2') => clockwise = true,
                    _ => return err(ch_start, ParseErrorKind::UnsupportedChirality),
                }
                self.pos += 1;
            } else if matches!(
                self.s.get(self.pos..self.pos + 2),
                Some(b"AL" | b"SP" | b"TB" | b"OH")
            ) {
                return err(ch_start, ParseErrorKind::UnsupportedChirality);
            }
            chirality = Some(Chirality { clockwise, order: Vec::new() });
        }

        let mut hydrogens = 0u8;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            hydrogens = self.number(9)?.unwrap_or(1) as u8;
        }

        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let charge_start = self.pos;
            let unit = if sign == b'+' { 1 } else { -1 };
            self.pos += 1;
            if let Some(v) = self.number(15).map_err(|_| ParseError {
                offset: charge_start,
                kind: ParseErrorKind::InvalidCharge,
            })? {
                charge = unit * v as i32;
            } else {
                let mut count = 1;
                while self.peek() == Some(sign) {
                    count += 1;
                    self.pos += 1;
                }
                if count > 15 {
                    return err(charge_start, ParseErrorKind::InvalidCharge);
                }
                charge = unit * count;
            }
            if matches!(self.peek(), Some(b'+' | b'-' | b'0'..=b'9')) {
                return err(charge_start, ParseErrorKind::InvalidCharge);
            }
        }

        if self.peek() == Some(b':') {
            // atom class: accepted and dropped
            self.pos += 1;
            if self.number(u32::MAX / 10)?.is_none() {
                return err(self.pos, ParseErrorKind::UnexpectedByte(b':'));
            }
        }

        match self.peek() {
            Some(b']') => self.pos += 1,
            Some(c) => return err(self.pos, ParseErrorKind::UnexpectedByte(c)),
            None => return err(open, ParseErrorKind::UnterminatedBracket),
        }

        Ok(Atom {
            element,
            charge: charge as i8,
            hydrogens,
            aromatic,
            isotope,
            bracket: true,
            chirality,
        })
    }
}
