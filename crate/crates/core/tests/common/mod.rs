#![allow(dead_code)]

//! Random program generator shared by the integration tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Gen {
    rng: ChaCha8Rng,
    scalars: Vec<String>,
    locals: Vec<String>,
    array: Option<(String, usize)>,
    index_param: Option<String>,
    loops: usize,
    out: String,
}

impl Gen {
    fn pick<'a>(&mut self, xs: &'a [String]) -> &'a str {
        &xs[self.rng.gen_range(0..xs.len())]
    }

    fn leaf(&mut self) -> String {
        match self.rng.gen_range(0..10) {
            0..=1 => self.rng.gen_range(-3..=3).to_string(),
            2..=5 => {
                let xs = self.scalars.clone();
                self.pick(&xs).to_string()
            }
            6..=7 => {
                let xs = self.locals.clone();
                self.pick(&xs).to_string()
            }
            _ => match (&self.array, &self.index_param) {
                (Some((a, len)), Some(k)) => {
                    if self.rng.gen_bool(0.5) {
                        format!("{a}[{k}]")
                    } else {
                        format!("{a}[{}]", self.rng.gen_range(0..*len))
                    }
                }
                _ => "1".to_string(),
            },
        }
    }

    fn expr(&mut self, depth: usize) -> String {
        if depth == 0 || self.rng.gen_bool(0.5) {
            return self.leaf();
        }
        let a = self.expr(depth - 1);
        match self.rng.gen_range(0..24) {
            0..=7 => format!("{a} + {}", self.expr(depth - 1)),
            8..=13 => format!("{a} - {}", self.expr(depth - 1)),
            14..=17 => format!("({a}) * {}", self.leaf()),
            18..=19 => format!("({a}) / {}", self.rng.gen_range(1..=3)),
            20..=22 => format!("({a}) % {}", self.rng.gen_range(2..=3)),
            // may divide by zero at run time
            _ => {
                let xs = self.scalars.clone();
                format!("({a}) / {}", self.pick(&xs))
            }
        }
    }

    fn atom(&mut self) -> String {
        let op = ["<", "<=", "==", "!=", ">", ">="][self.rng.gen_range(0..6)];
        format!("{} {op} {}", self.expr(1), self.expr(1))
    }

    fn cond(&mut self, depth: usize) -> String {
        if depth == 0 || self.rng.gen_bool(0.55) {
            return self.atom();
        }
        match self.rng.gen_range(0..5) {
            0..=1 => format!("{} && {}", self.cond(depth - 1), self.cond(depth - 1)),
            2..=3 => format!("({}) || {}", self.cond(depth - 1), self.cond(depth - 1)),
            _ => format!("!({})", self.atom()),
        }
    }

    fn line(&mut self, indent: usize, s: &str) {
        self.out.push_str(&"  ".repeat(indent));
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn block(&mut self, indent: usize, depth: usize, len: usize) {
        for _ in 0..len {
            self.stmt(indent, depth);
        }
    }

    fn stmt(&mut self, indent: usize, depth: usize) {
        let choice = if depth == 0 {
            0
        } else {
            self.rng.gen_range(0..10)
        };
        match choice {
            0..=3 => {
                let xs = self.locals.clone();
                let v = self.pick(&xs).to_string();
                let e = self.expr(2);
                self.line(indent, &format!("{v} = {e};"));
            }
            4 if self.array.is_some() => {
                let (a, len) = self.array.clone().unwrap();
                let i = self.rng.gen_range(0..len);
                let e = self.expr(1);
                self.line(indent, &format!("{a}[{i}] = {e};"));
            }
            4..=7 => {
                let c = self.cond(2);
                self.line(indent, &format!("if ({c}) {{"));
                let n = self.rng.gen_range(0..=2);
                self.block(indent + 1, depth - 1, n);
                if self.rng.gen_bool(0.6) {
                    self.line(indent, "} else {");
                    let n = self.rng.gen_range(0..=2);
                    self.block(indent + 1, depth - 1, n);
                }
                self.line(indent, "}");
            }
            _ => {
                let i = format!("i{}", self.loops);
                self.loops += 1;
                let bound = self.rng.gen_range(1..=3);
                self.line(indent, &format!("{i} = 0;"));
                let c = self.cond(1);
                self.line(
                    indent,
                    &format!("while ({i} < {bound} && ({c})) cap {bound} {{"),
                );
                let n = self.rng.gen_range(0..=2);
                self.block(indent + 1, depth - 1, n);
                self.line(indent + 1, &format!("{i} = {i} + 1;"));
                self.line(indent, "}");
            }
        }
    }
}

/// A random valid program whose input domain stays small enough for exhaustive enumeration.
pub fn random_program(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_scalars = rng.gen_range(1..=3);
    let mut params = Vec::new();
    let mut scalars = Vec::new();
    for i in 0..n_scalars {
        let lo = rng.gen_range(-3..=0);
        let hi = lo + rng.gen_range(1..=4);
        params.push(format!("x{i}: int[{lo}..{hi}]"));
        scalars.push(format!("x{i}"));
    }
    let (mut array, mut index_param) = (None, None);
    if rng.gen_bool(0.35) {
        let len = rng.gen_range(2..=3);
        params.push(format!("a: int[0..2][{len}]"));
        params.push(format!("k: int[0..{}]", len - 1));
        scalars.push("k".to_string());
        array = Some(("a".to_string(), len));
        index_param = Some("k".to_string());
    }
    let locals: Vec<String> = (0..rng.gen_range(1..=3)).map(|i| format!("v{i}")).collect();
    let mut g = Gen {
        rng,
        scalars,
        locals: locals.clone(),
        array,
        index_param,
        loops: 0,
        out: String::new(),
    };
    let requires = if g.rng.gen_bool(0.2) {
        format!(
            " requires {};",
            g.atom()
                .replace("v0", "x0")
                .replace("v1", "x0")
                .replace("v2", "x0")
        )
    } else {
        String::new()
    };
    g.line(
        0,
        &format!("fun gen{seed}({}){requires} {{", params.join(", ")),
    );
    for v in &locals {
        g.line(1, &format!("{v} = 0;"));
    }
    let n = g.rng.gen_range(1..=4);
    g.block(1, 3, n);
    g.line(0, "}");
    g.out
}
