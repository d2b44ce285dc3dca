//! Bounds-consistency propagation over interval domains.
//!
//! Linear parts get exact bounds reasoning; `Mul` is projected through interval division when
//! the other factor excludes zero, while `Div`, `Mod` and `Select` only contribute forward bounds
//! (plus index narrowing for `Select`). Expression bounds are computed in `i128`, saturated at
//! `±INF`, so no intermediate result can overflow.

use crate::lang::RelOp;

use super::term::{Atom, Comparison, Constraint, LinExpr, VarId};

pub(crate) const INF: i128 = 1 << 100;

/// Sweeps over the constraint set per fixpoint computation. Stopping early only loses pruning.
const MAX_ROUNDS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Fail;

type Iv = (i128, i128);

fn clamp(v: i128) -> i128 {
    v.clamp(-INF, INF)
}

fn sat_mul(a: i128, b: i128) -> i128 {
    match a.checked_mul(b) {
        Some(v) => clamp(v),
        None if (a < 0) == (b < 0) => INF,
        None => -INF,
    }
}

fn floor_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn ceil_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) == (b < 0)) {
        q + 1
    } else {
        q
    }
}

fn iv_mul(a: Iv, b: Iv) -> Iv {
    let c = [
        sat_mul(a.0, b.0),
        sat_mul(a.0, b.1),
        sat_mul(a.1, b.0),
        sat_mul(a.1, b.1),
    ];
    (*c.iter().min().unwrap(), *c.iter().max().unwrap())
}

/// Interval store plus an optional undo trail.
pub(crate) struct Store<'a> {
    pub iv: &'a mut [(i64, i64)],
    pub trail: Option<&'a mut Vec<(VarId, (i64, i64))>>,
    pub steps: u64,
}

impl<'a> Store<'a> {
    pub fn new(iv: &'a mut [(i64, i64)], trail: Option<&'a mut Vec<(VarId, (i64, i64))>>) -> Self {
        Store {
            iv,
            trail,
            steps: 0,
        }
    }

    fn get(&self, v: VarId) -> (i64, i64) {
        self.iv[v.index()]
    }

    /// Intersects `v`'s interval with `[lo, hi]`; reports whether it changed.
    fn narrow_var(&mut self, v: VarId, lo: i128, hi: i128) -> Result<bool, Fail> {
        let (cl, ch) = self.get(v);
        let nl = (cl as i128).max(lo);
        let nh = (ch as i128).min(hi);
        if nl > nh {
            return Err(Fail);
        }
        let (nl, nh) = (nl as i64, nh as i64);
        if (nl, nh) == (cl, ch) {
            return Ok(false);
        }
        if let Some(trail) = self.trail.as_deref_mut() {
            trail.push((v, (cl, ch)));
        }
        self.iv[v.index()] = (nl, nh);
        Ok(true)
    }

    pub fn lin_bounds(&self, e: &LinExpr) -> Option<Iv> {
        let mut lo = e.constant_part() as i128;
        let mut hi = lo;
        for (a, c) in e.terms() {
            let (al, ah) = self.atom_bounds(a)?;
            let t = iv_mul((al, ah), (*c as i128, *c as i128));
            lo = clamp(lo + t.0);
            hi = clamp(hi + t.1);
        }
        Some((lo, hi))
    }

    /// Forward bounds of an atom; `None` when it is undefined everywhere in the box.
    pub fn atom_bounds(&self, a: &Atom) -> Option<Iv> {
        match a {
            Atom::Var(v) => {
                let (l, h) = self.get(*v);
                Some((l as i128, h as i128))
            }
            Atom::Mul(x, y) => Some(iv_mul(self.lin_bounds(x)?, self.lin_bounds(y)?)),
            Atom::Div(x, y) => {
                let (xl, xh) = self.lin_bounds(x)?;
                let mut out: Option<Iv> = None;
                for (yl, yh) in nonzero_parts(self.lin_bounds(y)?) {
                    for n in [xl, xh] {
                        for d in [yl, yh] {
                            let q = n / d;
                            out = Some(match out {
                                None => (q, q),
                                Some((l, h)) => (l.min(q), h.max(q)),
                            });
                        }
                    }
                }
                out
            }
            Atom::Mod(x, y) => {
                let (xl, xh) = self.lin_bounds(x)?;
                let (yl, yh) = self.lin_bounds(y)?;
                if (yl, yh) == (0, 0) {
                    return None;
                }
                if xl == xh && yl == yh {
                    return Some((xl % yl, xl % yl));
                }
                let m = yl.abs().max(yh.abs()) - 1;
                let lo = if xl >= 0 { 0 } else { xl.max(-m) };
                let hi = if xh <= 0 { 0 } else { xh.min(m) };
                Some((lo, hi))
            }
            Atom::Select(cells, idx) => {
                let (il, ih) = self.lin_bounds(idx)?;
                let il = il.max(0);
                let ih = ih.min(cells.len() as i128 - 1);
                let mut out: Option<Iv> = None;
                let mut i = il;
                while i <= ih {
                    if let Some((cl, ch)) = self.lin_bounds(&cells[i as usize]) {
                        out = Some(match out {
                            None => (cl, ch),
                            Some((l, h)) => (l.min(cl), h.max(ch)),
                        });
                    }
                    i += 1;
                }
                out
            }
        }
    }

    /// Narrows the variables of `e` so that `e ∈ [lo, hi]` stays possible.
    fn narrow_lin(&mut self, e: &LinExpr, lo: i128, hi: i128) -> Result<bool, Fail> {
        let mut bounds = Vec::with_capacity(e.terms().len());
        let (mut tl, mut th) = (e.constant_part() as i128, e.constant_part() as i128);
        for (a, c) in e.terms() {
            let ab = self.atom_bounds(a).ok_or(Fail)?;
            let t = iv_mul(ab, (*c as i128, *c as i128));
            tl = clamp(tl + t.0);
            th = clamp(th + t.1);
            bounds.push(t);
        }
        if tl > hi || th < lo {
            return Err(Fail);
        }
        let mut changed = false;
        for (k, (a, c)) in e.terms().iter().enumerate() {
            let (kl, kh) = bounds[k];
            // bounds of everything except term k
            let rest_lo = if tl <= -INF || kl <= -INF {
                -INF
            } else {
                tl - kl
            };
            let rest_hi = if th >= INF || kh >= INF { INF } else { th - kh };
            let t_lo = if lo <= -INF || rest_hi >= INF {
                -INF
            } else {
                clamp(lo - rest_hi)
            };
            let t_hi = if hi >= INF || rest_lo <= -INF {
                INF
            } else {
                clamp(hi - rest_lo)
            };
            let c = *c as i128;
            let (a_lo, a_hi) = if c > 0 {
                (
                    if t_lo <= -INF {
                        -INF
                    } else {
                        ceil_div(t_lo, c)
                    },
                    if t_hi >= INF { INF } else { floor_div(t_hi, c) },
                )
            } else {
                (
                    if t_hi >= INF { -INF } else { ceil_div(t_hi, c) },
                    if t_lo <= -INF {
                        INF
                    } else {
                        floor_div(t_lo, c)
                    },
                )
            };
            changed |= self.narrow_atom(a, a_lo, a_hi)?;
        }
        Ok(changed)
    }

    fn narrow_atom(&mut self, a: &Atom, lo: i128, hi: i128) -> Result<bool, Fail> {
        if lo > hi {
            return Err(Fail);
        }
        match a {
            Atom::Var(v) => self.narrow_var(*v, lo, hi),
            Atom::Mul(x, y) => {
                let (pl, ph) = self.atom_bounds(a).ok_or(Fail)?;
                if pl > hi || ph < lo {
                    return Err(Fail);
                }
                let mut changed = false;
                for (f, g) in [(x, y), (y, x)] {
                    let gb = self.lin_bounds(g).ok_or(Fail)?;
                    if gb.0 > 0 || gb.1 < 0 {
                        if let Some((fl, fh)) = quotient_hull((lo, hi), gb) {
                            changed |= self.narrow_lin(f, fl, fh)?;
                        }
                    }
                }
                Ok(changed)
            }
            Atom::Select(cells, idx) => {
                let (il, ih) = self.lin_bounds(idx).ok_or(Fail)?;
                let il = il.max(0);
                let ih = ih.min(cells.len() as i128 - 1);
                let mut feasible = Vec::new();
                let mut i = il;
                while i <= ih {
                    if let Some((cl, ch)) = self.lin_bounds(&cells[i as usize]) {
                        if cl <= hi && ch >= lo {
                            feasible.push(i);
                        }
                    }
                    i += 1;
                }
                let (Some(&first), Some(&last)) = (feasible.first(), feasible.last()) else {
                    return Err(Fail);
                };
                let mut changed = self.narrow_lin(idx, first, last)?;
                if first == last {
                    changed |= self.narrow_lin(&cells[first as usize], lo, hi)?;
                }
                Ok(changed)
            }
            Atom::Div(..) | Atom::Mod(..) => {
                let (l, h) = self.atom_bounds(a).ok_or(Fail)?;
                if l > hi || h < lo {
                    Err(Fail)
                } else {
                    Ok(false)
                }
            }
        }
    }

    fn revise_cmp(&mut self, c: &Comparison) -> Result<bool, Fail> {
        let d = c.diff();
        match c.op() {
            RelOp::Lt => self.narrow_lin(d, -INF, -1),
            RelOp::Le => self.narrow_lin(d, -INF, 0),
            RelOp::Eq => self.narrow_lin(d, 0, 0),
            RelOp::Gt => self.narrow_lin(d, 1, INF),
            RelOp::Ge => self.narrow_lin(d, 0, INF),
            RelOp::Ne => self.revise_ne(d),
        }
    }

    fn revise_ne(&mut self, d: &LinExpr) -> Result<bool, Fail> {
        let (lo, hi) = self.lin_bounds(d).ok_or(Fail)?;
        if lo == 0 && hi == 0 {
            return Err(Fail);
        }
        // Only a single unfixed variable term can lose a bound value.
        let mut open = None;
        let mut rest = d.constant_part() as i128;
        for (a, c) in d.terms() {
            let (al, ah) = self.atom_bounds(a).ok_or(Fail)?;
            if al == ah {
                rest += al * *c as i128;
            } else if open.is_some() {
                return Ok(false);
            } else {
                open = Some((a, *c as i128));
            }
        }
        let Some((Atom::Var(v), c)) = open else {
            return Ok(false);
        };
        if rest % c != 0 {
            return Ok(false);
        }
        let forbidden = -rest / c;
        let (vl, vh) = self.get(*v);
        if forbidden == vl as i128 {
            self.narrow_var(*v, forbidden + 1, INF)
        } else if forbidden == vh as i128 {
            self.narrow_var(*v, -INF, forbidden - 1)
        } else {
            Ok(false)
        }
    }

    /// One revision of `c`. Each call counts as one propagation step.
    pub fn revise(&mut self, c: &Constraint) -> Result<bool, Fail> {
        self.steps += 1;
        match c {
            Constraint::Cmp(cmp) => self.revise_cmp(cmp),
            Constraint::And(cs) => {
                let mut changed = false;
                for c in cs {
                    changed |= self.revise(c)?;
                }
                Ok(changed)
            }
            Constraint::Or(cs) => self.revise_or(cs),
        }
    }

    /// Constructive disjunction: keep the interval hull of what each disjunct allows.
    fn revise_or(&mut self, cs: &[Constraint]) -> Result<bool, Fail> {
        let mut hull: Option<Vec<(i64, i64)>> = None;
        for c in cs {
            let mut scratch = self.iv.to_vec();
            let mut sub = Store::new(&mut scratch, None);
            let ok = fixpoint(&mut sub, std::iter::once(c)).is_ok();
            self.steps += sub.steps;
            if !ok {
                continue;
            }
            hull = Some(match hull {
                None => scratch,
                Some(h) => h
                    .iter()
                    .zip(&scratch)
                    .map(|(&(al, ah), &(bl, bh))| (al.min(bl), ah.max(bh)))
                    .collect(),
            });
        }
        let hull = hull.ok_or(Fail)?;
        let mut changed = false;
        for (i, (l, h)) in hull.into_iter().enumerate() {
            changed |= self.narrow_var(VarId(i as u32), l as i128, h as i128)?;
        }
        Ok(changed)
    }
}

/// Revises every constraint until nothing changes (or the round limit is hit).
pub(crate) fn fixpoint<'c>(
    store: &mut Store<'_>,
    constraints: impl Iterator<Item = &'c Constraint> + Clone,
) -> Result<(), Fail> {
    for _ in 0..MAX_ROUNDS {
        let mut changed = false;
        for c in constraints.clone() {
            changed |= store.revise(c)?;
        }
        if !changed {
            return Ok(());
        }
    }
    Ok(())
}

fn nonzero_parts((l, h): Iv) -> Vec<Iv> {
    let mut out = Vec::new();
    if l <= -1 {
        out.push((l, h.min(-1)));
    }
    if h >= 1 {
        out.push((l.max(1), h));
    }
    out
}

/// Hull of `{ f : f * g ∈ target, g ∈ gb }` for `gb` not containing zero, rounded outward.
fn quotient_hull(target: Iv, gb: Iv) -> Option<Iv> {
    let (tl, th) = target;
    if tl <= -INF && th >= INF {
        return None;
    }
    let mut lo = INF;
    let mut hi = -INF;
    for t in [tl, th] {
        for g in [gb.0, gb.1] {
            if t.abs() >= INF || g.abs() >= INF {
                // an unbounded corner leaves that side open
                let pos = (t >= 0) == (g > 0);
                if t.abs() >= INF {
                    if pos {
                        hi = INF;
                    } else {
                        lo = -INF;
                    }
                } else {
                    lo = lo.min(0);
                    hi = hi.max(0);
                }
                continue;
            }
            lo = lo.min(floor_div(t, g));
            hi = hi.max(ceil_div(t, g));
        }
    }
    Some((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_helpers() {
        assert_eq!(floor_div(7, 2), 3);
        assert_eq!(floor_div(-7, 2), -4);
        assert_eq!(ceil_div(7, 2), 4);
        assert_eq!(ceil_div(-7, 2), -3);
        assert_eq!(ceil_div(-7, -2), 4);
    }

    #[test]
    fn quotient_hull_covers_all_factors() {
        // f * g in [4, 9], g in [2, 3] -> f in [4/3, 9/2] -> hull [1, 5] after outward rounding
        assert_eq!(quotient_hull((4, 9), (2, 3)), Some((1, 5)));
        for f in -20..=20i128 {
            for g in 2..=3 {
                if (4..=9).contains(&(f * g)) {
                    assert!((1..=5).contains(&f));
                }
            }
        }
    }

    #[test]
    fn linear_bounds_narrow_to_window() {
        let mut iv = vec![(0, 10), (0, 10)];
        let mut store = Store::new(&mut iv, None);
        let sum = LinExpr::var(VarId(0)).add(&LinExpr::var(VarId(1))).unwrap();
        let c = Constraint::cmp(sum, RelOp::Ge, LinExpr::constant(18)).unwrap();
        fixpoint(&mut store, std::iter::once(&c)).unwrap();
        assert_eq!(iv, vec![(8, 10), (8, 10)]);
    }

    #[test]
    fn disequality_trims_bound_only() {
        let mut iv = vec![(0, 3)];
        let mut store = Store::new(&mut iv, None);
        let c = Constraint::cmp(LinExpr::var(VarId(0)), RelOp::Ne, LinExpr::constant(0)).unwrap();
        fixpoint(&mut store, std::iter::once(&c)).unwrap();
        assert_eq!(iv, vec![(1, 3)]);
        let mut iv = vec![(0, 3)];
        let mut store = Store::new(&mut iv, None);
        let c = Constraint::cmp(LinExpr::var(VarId(0)), RelOp::Ne, LinExpr::constant(2)).unwrap();
        fixpoint(&mut store, std::iter::once(&c)).unwrap();
        assert_eq!(iv, vec![(0, 3)]);
    }
}
