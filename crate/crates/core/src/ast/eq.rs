//! Structural equality for expressions.
//!
//! Two definite descriptions are equal when their bodies match after
//! renaming one node's slot variables to the other's, so `PartialEq` is
//! implemented by a walk that carries a stack of tag correspondences
//! (innermost binding wins, mirroring slot shadowing in evaluation).

use super::expr::{Formula, IotaTag, Program, SdeSystem, Term, Var};

#[derive(Default)]
struct Pairing {
    stack: Vec<(IotaTag, IotaTag)>,
}

impl Pairing {
    fn vars_eq(&self, a: &Var, b: &Var) -> bool {
        match (a, b) {
            (Var::Named(x), Var::Named(y)) => x == y,
            (Var::Time(x), Var::Time(y)) => self.vars_eq(x, y),
            (Var::Brownian(x, i), Var::Brownian(y, j)) => self.vars_eq(x, y) && self.vars_eq(i, j),
            (Var::Slot { owner: ta, index: ia }, Var::Slot { owner: tb, index: ib }) => {
                if ia != ib {
                    return false;
                }
                // Innermost correspondence involving either tag decides.
                for (l, r) in self.stack.iter().rev() {
                    if l == ta || r == tb {
                        return l == ta && r == tb;
                    }
                }
                ta == tb
            }
            _ => false,
        }
    }
}

fn terms_eq(p: &mut Pairing, a: &Term, b: &Term) -> bool {
    match (a, b) {
        (Term::Const(x), Term::Const(y)) => x == y,
        (Term::Var(x), Term::Var(y)) => p.vars_eq(x, y),
        (Term::Add(a1, a2), Term::Add(b1, b2)) | (Term::Mul(a1, a2), Term::Mul(b1, b2)) => {
            terms_eq(p, a1, b1) && terms_eq(p, a2, b2)
        }
        (Term::Func(fa, xa), Term::Func(fb, xb)) => {
            fa == fb && xa.len() == xb.len() && xa.iter().zip(xb).all(|(x, y)| terms_eq(p, x, y))
        }
        (Term::DiffT(x), Term::DiffT(y)) => terms_eq(p, x, y),
        (Term::DiffB(va, x), Term::DiffB(vb, y)) => p.vars_eq(va, vb) && terms_eq(p, x, y),
        (
            Term::Iota { tag: ta, select: sa, arity: aa, body: ba },
            Term::Iota { tag: tb, select: sb, arity: ab, body: bb },
        ) => {
            if sa != sb || aa != ab {
                return false;
            }
            p.stack.push((*ta, *tb));
            let r = formulas_eq(p, ba, bb);
            p.stack.pop();
            r
        }
        _ => false,
    }
}

fn sdes_eq(p: &mut Pairing, a: &SdeSystem, b: &SdeSystem) -> bool {
    a.vars.len() == b.vars.len()
        && a.vars.iter().zip(&b.vars).all(|(x, y)| p.vars_eq(x, y))
        && a.drift.len() == b.drift.len()
        && a.drift.iter().zip(&b.drift).all(|(x, y)| terms_eq(p, x, y))
        && a.diffusion.len() == b.diffusion.len()
        && a.diffusion.iter().zip(&b.diffusion).all(|(ra, rb)| {
            ra.len() == rb.len() && ra.iter().zip(rb).all(|(x, y)| terms_eq(p, x, y))
        })
        && formulas_eq(p, &a.boundary, &b.boundary)
}

fn programs_eq(p: &mut Pairing, a: &Program, b: &Program) -> bool {
    match (a, b) {
        (Program::Assign(va, ta), Program::Assign(vb, tb)) => {
            p.vars_eq(va, vb) && terms_eq(p, ta, tb)
        }
        (Program::Random(va), Program::Random(vb)) => p.vars_eq(va, vb),
        (Program::Sde(sa), Program::Sde(sb)) => sdes_eq(p, sa, sb),
        (Program::If(ha, aa, ba), Program::If(hb, ab, bb)) => {
            formulas_eq(p, ha, hb) && programs_eq(p, aa, ab) && programs_eq(p, ba, bb)
        }
        (Program::Choice(a1, a2), Program::Choice(b1, b2))
        | (Program::Seq(a1, a2), Program::Seq(b1, b2)) => {
            programs_eq(p, a1, b1) && programs_eq(p, a2, b2)
        }
        (Program::Star(x), Program::Star(y)) => programs_eq(p, x, y),
        (Program::Skip, Program::Skip) | (Program::Fail, Program::Fail) => true,
        (Program::Symbol(x), Program::Symbol(y)) => x == y,
        _ => false,
    }
}

fn formulas_eq(p: &mut Pairing, a: &Formula, b: &Formula) -> bool {
    match (a, b) {
        (Formula::Geq(a1, a2), Formula::Geq(b1, b2)) => {
            terms_eq(p, a1, b1) && terms_eq(p, a2, b2)
        }
        (Formula::Not(x), Formula::Not(y)) | (Formula::Sure(x), Formula::Sure(y)) => {
            formulas_eq(p, x, y)
        }
        (Formula::And(a1, a2), Formula::And(b1, b2)) => {
            formulas_eq(p, a1, b1) && formulas_eq(p, a2, b2)
        }
        (
            Formula::Pred { name: na, arity: aa, args: xa },
            Formula::Pred { name: nb, arity: ab, args: xb },
        ) => na == nb && aa == ab && xa.iter().zip(xb).all(|(x, y)| terms_eq(p, x, y)),
        (Formula::Diamond(pa, fa), Formula::Diamond(pb, fb)) => {
            programs_eq(p, pa, pb) && formulas_eq(p, fa, fb)
        }
        _ => false,
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        terms_eq(&mut Pairing::default(), self, other)
    }
}
impl Eq for Term {}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        programs_eq(&mut Pairing::default(), self, other)
    }
}
impl Eq for Program {}

impl PartialEq for Formula {
    fn eq(&self, other: &Self) -> bool {
        formulas_eq(&mut Pairing::default(), self, other)
    }
}
impl Eq for Formula {}

impl PartialEq for SdeSystem {
    fn eq(&self, other: &Self) -> bool {
        sdes_eq(&mut Pairing::default(), self, other)
    }
}
impl Eq for SdeSystem {}

#[cfg(test)]
mod tests {
    use crate::ast::expr::{Formula, IotaTag, Term, Var};

    fn sqrt_body(tag: IotaTag, of: &str) -> Formula {
        let d1 = Term::Var(Var::Slot { owner: tag, index: 1 });
        let y = Term::var(of);
        Formula::geq(d1.clone().mul(d1.clone()), y.clone())
            .and(Formula::geq(y, d1.clone().mul(d1.clone())))
            .and(Formula::geq(d1, Term::Const(0.0)))
    }

    #[test]
    fn iota_equality_ignores_tag_identity() {
        let t1 = IotaTag::fresh();
        let t2 = IotaTag::fresh();
        let a = Term::Iota { tag: t1, select: 1, arity: 1, body: Box::new(sqrt_body(t1, "y")) };
        let b = Term::Iota { tag: t2, select: 1, arity: 1, body: Box::new(sqrt_body(t2, "y")) };
        assert_eq!(a, b);
        let c = Term::Iota { tag: t2, select: 1, arity: 1, body: Box::new(sqrt_body(t2, "z")) };
        assert_ne!(a, c);
    }

    #[test]
    fn slot_index_still_matters() {
        let t1 = IotaTag::fresh();
        let t2 = IotaTag::fresh();
        let mk = |tag: IotaTag, idx: u32| {
            Formula::geq(Term::Var(Var::Slot { owner: tag, index: idx }), Term::Const(0.0))
        };
        let a = Term::Iota { tag: t1, select: 1, arity: 2, body: Box::new(mk(t1, 1)) };
        let b = Term::Iota { tag: t2, select: 1, arity: 2, body: Box::new(mk(t2, 2)) };
        assert_ne!(a, b);
    }
}
