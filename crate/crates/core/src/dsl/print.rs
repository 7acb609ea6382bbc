use std::fmt;

use super::Expr;

const ADD: u8 = 1;
const MUL: u8 = 2;
const NEG: u8 = 3;
const POW: u8 = 4;
const ATOM: u8 = 5;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => ADD,
        Expr::Mul(..) | Expr::Div(..) => MUL,
        Expr::Neg(..) => NEG,
        Expr::Pow(..) => POW,
        Expr::Num(r) if *r.denom() != 1 || *r < 0 => ADD,
        _ => ATOM,
    }
}

fn child(f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool) -> fmt::Result {
    if paren {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(r) => write!(f, "{r}"),
            Expr::Sym(s) => write!(f, "{s}"),
            Expr::Cell(o) => write!(f, "z[{},{}]", o.dn, o.dt),
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                child(f, a, prec(a) < ADD)?;
                f.write_str(if matches!(self, Expr::Add(..)) { " + " } else { " - " })?;
                child(f, b, prec(b) <= ADD)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                child(f, a, prec(a) < MUL)?;
                f.write_str(if matches!(self, Expr::Mul(..)) { "*" } else { "/" })?;
                child(f, b, prec(b) <= MUL)
            }
            Expr::Neg(a) => {
                f.write_str("-")?;
                child(f, a, prec(a) < NEG)
            }
            Expr::Pow(a, e) => {
                child(f, a, prec(a) <= POW)?;
                f.write_str("^")?;
                child(f, e, prec(e) < NEG)
            }
            Expr::Sqrt(a) => write!(f, "sqrt({a})"),
        }
    }
}
