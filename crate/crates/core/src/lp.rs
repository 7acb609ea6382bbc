//! Dense two-phase simplex over exact rationals with Bland's anti-cycling rule.

use rug::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub rel: Relation,
    pub rhs: Rational,
}

/// `maximize objective·x` subject to the constraints; variables are
/// nonnegative unless marked free.
#[derive(Clone, Debug)]
pub struct Lp {
    pub n: usize,
    pub objective: Vec<Rational>,
    pub free: Vec<bool>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal { x: Vec<Rational>, value: Rational },
    Infeasible,
    Unbounded,
}

impl Lp {
    pub fn new(n: usize) -> Self {
        Lp {
            n,
            objective: vec![Rational::new(); n],
            free: vec![false; n],
            constraints: Vec::new(),
        }
    }

    pub fn constrain(&mut self, coeffs: Vec<Rational>, rel: Relation, rhs: Rational) {
        assert_eq!(coeffs.len(), self.n, "constraint width");
        self.constraints.push(Constraint { coeffs, rel, rhs });
    }

    pub fn solve(&self) -> LpOutcome {
        solve(self)
    }
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> &Rational {
        &self.rows[i][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v /= &p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c] == 0 {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if *pv != 0 {
                    *v -= Rational::from(&f * pv);
                }
            }
        }
        self.basis[r] = c;
    }

    /// Maximizes `cost·x` over columns allowed by `allowed`. Returns false when unbounded.
    fn optimize(&mut self, cost: &[Rational], allowed: &dyn Fn(usize) -> bool) -> bool {
        loop {
            let mut entering = None;
            for j in 0..self.width {
                if !allowed(j) || self.basis.contains(&j) {
                    continue;
                }
                let mut r = cost[j].clone();
                for (i, &b) in self.basis.iter().enumerate() {
                    if cost[b] != 0 && self.rows[i][j] != 0 {
                        r -= Rational::from(&cost[b] * &self.rows[i][j]);
                    }
                }
                if r > 0 {
                    entering = Some(j);
                    break;
                }
            }
            let Some(c) = entering else { return true };
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                if self.rows[i][c] > 0 {
                    let ratio = Rational::from(self.rhs(i) / &self.rows[i][c]);
                    let better = match &leave {
                        None => true,
                        Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, c),
                None => return false,
            }
        }
    }

    fn value(&self, cost: &[Rational]) -> Rational {
        let mut v = Rational::new();
        for (i, &b) in self.basis.iter().enumerate() {
            v += Rational::from(&cost[b] * self.rhs(i));
        }
        v
    }
}

pub fn solve(lp: &Lp) -> LpOutcome {
    // column layout: structural (with free variables split), slacks, artificials
    let mut col_of: Vec<(usize, Option<usize>)> = Vec::with_capacity(lp.n);
    let mut ncols = 0;
    for j in 0..lp.n {
        if lp.free[j] {
            col_of.push((ncols, Some(ncols + 1)));
            ncols += 2;
        } else {
            col_of.push((ncols, None));
            ncols += 1;
        }
    }
    let structural = ncols;
    let m = lp.constraints.len();
    let mut norm: Vec<(Vec<Rational>, Relation, Rational)> = Vec::with_capacity(m);
    for c in &lp.constraints {
        let mut row = vec![Rational::new(); structural];
        for (j, a) in c.coeffs.iter().enumerate() {
            let (p, n) = col_of[j];
            row[p] = a.clone();
            if let Some(n) = n {
                row[n] = Rational::from(-a);
            }
        }
        let (mut rel, mut rhs) = (c.rel, c.rhs.clone());
        if rhs < 0 {
            for v in row.iter_mut() {
                *v = Rational::from(-&*v);
            }
            rhs = -rhs;
            rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        norm.push((row, rel, rhs));
    }
    let n_slack = norm.iter().filter(|(_, r, _)| *r != Relation::Eq).count();
    let n_art = norm.iter().filter(|(_, r, _)| *r != Relation::Le).count();
    let width = structural + n_slack + n_art;
    let first_art = structural + n_slack;
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let (mut s, mut a) = (structural, first_art);
    for (row, rel, rhs) in norm {
        let mut full = row;
        full.resize(width + 1, Rational::new());
        match rel {
            Relation::Le => {
                full[s] = Rational::from(1);
                basis.push(s);
                s += 1;
            }
            Relation::Ge => {
                full[s] = Rational::from(-1);
                s += 1;
                full[a] = Rational::from(1);
                basis.push(a);
                a += 1;
            }
            Relation::Eq => {
                full[a] = Rational::from(1);
                basis.push(a);
                a += 1;
            }
        }
        full[width] = rhs;
        rows.push(full);
    }
    let mut t = Tableau { rows, basis, width };

    if n_art > 0 {
        let mut phase1 = vec![Rational::new(); width];
        for c in phase1.iter_mut().skip(first_art) {
            *c = Rational::from(-1);
        }
        t.optimize(&phase1, &|_| true);
        if t.value(&phase1) < 0 {
            return LpOutcome::Infeasible;
        }
        // drive zero-valued artificials out of the basis; drop redundant rows
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= first_art {
                match (0..first_art).find(|&j| t.rows[i][j] != 0) {
                    Some(j) => t.pivot(i, j),
                    None => {
                        t.rows.remove(i);
                        t.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    let mut cost = vec![Rational::new(); width];
    for (j, c) in lp.objective.iter().enumerate() {
        let (p, n) = col_of[j];
        cost[p] = c.clone();
        if let Some(n) = n {
            cost[n] = Rational::from(-c);
        }
    }
    if !t.optimize(&cost, &|j| j < first_art) {
        return LpOutcome::Unbounded;
    }
    let mut cols = vec![Rational::new(); width];
    for (i, &b) in t.basis.iter().enumerate() {
        cols[b] = t.rhs(i).clone();
    }
    let x = col_of
        .iter()
        .map(|&(p, n)| match n {
            Some(n) => Rational::from(&cols[p] - &cols[n]),
            None => cols[p].clone(),
        })
        .collect();
    LpOutcome::Optimal {
        value: t.value(&cost),
        x,
    }
}
