use std::fmt::{self, Display, Write};

use super::ast::{Node, SmoothExpr};

const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const POWER: u8 = 3;
const ATOM: u8 = 4;

fn precedence(e: &SmoothExpr) -> u8 {
    match e.node() {
        Node::Add(..) | Node::Sub(..) => SUM,
        Node::Mul(..) | Node::Div(..) => PRODUCT,
        Node::Pow(..) => POWER,
        _ => ATOM,
    }
}

fn write_number(f: &mut impl Write, c: f64) -> fmt::Result {
    let magnitude = c.abs();
    let text = if magnitude.fract() == 0.0 && magnitude < 1e15 {
        format!("{}", magnitude as i64)
    } else {
        format!("{magnitude:?}")
    };
    if c < 0.0 {
        write!(f, "(0-{text})")
    } else {
        f.write_str(&text)
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &SmoothExpr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

fn write_binary(
    f: &mut fmt::Formatter<'_>,
    op: &str,
    level: u8,
    a: &SmoothExpr,
    b: &SmoothExpr,
) -> fmt::Result {
    write_child(f, a, precedence(a) < level)?;
    f.write_str(op)?;
    // left-associative: an equal-precedence right operand keeps its parens
    write_child(f, b, precedence(b) <= level)
}

impl Display for SmoothExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => write_number(f, *c),
            Node::Var(i) => write!(f, "x{}", i + 1),
            Node::Add(a, b) => write_binary(f, "+", SUM, a, b),
            Node::Sub(a, b) => write_binary(f, "-", SUM, a, b),
            Node::Mul(a, b) => write_binary(f, "*", PRODUCT, a, b),
            Node::Div(a, b) => write_binary(f, "/", PRODUCT, a, b),
            Node::Pow(a, k) => {
                write_child(f, a, precedence(a) < ATOM)?;
                write!(f, "^{k}")
            }
            Node::Exp(a) => write!(f, "exp({a})"),
            Node::Sin(a) => write!(f, "sin({a})"),
            Node::Cos(a) => write!(f, "cos({a})"),
            Node::Flat { order: 0, arg } => write!(f, "flat({arg})"),
            Node::Flat { order, arg } => write!(f, "flatd({order},{arg})"),
            Node::Proj(p) => {
                write!(f, "proj({},{};{}", p.row + 1, p.col + 1, p.support)?;
                for col in p.columns.iter() {
                    f.write_str(";[")?;
                    for (k, e) in col.iter().enumerate() {
                        if k > 0 {
                            f.write_str(",")?;
                        }
                        write!(f, "{e}")?;
                    }
                    f.write_str("]")?;
                }
                f.write_str(")")
            }
            Node::Partial { counts, inner } => {
                f.write_str("partial([")?;
                for (k, c) in counts.iter().enumerate() {
                    if k > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, "];{inner})")
            }
        }
    }
}
