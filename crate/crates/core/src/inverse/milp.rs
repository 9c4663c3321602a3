use std::collections::{BTreeMap, HashMap};

use super::spec::{Layout, SlotKind, TopologicalSpec};
use super::InverseError;
use crate::descriptors::{fc_key, parse_ec_key};
use crate::element::Element;
use crate::learn::Predictor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Integer,
    Continuous,
}

/// What a variable stands for. Slot, fringe and multiplicity variables are
/// structural: they alone determine the decoded graph.
#[derive(Clone, Debug, PartialEq)]
pub enum Role {
    /// Constant 1, used to write otherwise empty rows.
    One,
    /// Internal vertex `t` of the path on typical edge `typical` is used.
    Slot { typical: usize, t: usize },
    Fringe { vertex: usize, entry: usize },
    Mult { edge: usize, order: u8 },
    /// Indicator that edge slot `edge` realizes configuration `key`.
    Product { edge: usize, key: String },
    Hidden { layer: usize, unit: usize },
    Switch { layer: usize, unit: usize },
}

impl Role {
    pub fn is_structural(&self) -> bool {
        matches!(self, Role::Slot { .. } | Role::Fringe { .. } | Role::Mult { .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Var {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    pub role: Role,
}

/// Affine expression `Σ coef · var + constant`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn constant(c: f64) -> LinExpr {
        LinExpr {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(v: VarId) -> LinExpr {
        LinExpr {
            terms: vec![(v, 1.0)],
            constant: 0.0,
        }
    }

    pub fn add_term(&mut self, v: VarId, c: f64) {
        self.terms.push((v, c));
    }

    /// `self += scale · other`.
    pub fn add(&mut self, other: &LinExpr, scale: f64) {
        self.terms.extend(other.terms.iter().map(|&(v, c)| (v, c * scale)));
        self.constant += other.constant * scale;
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * values[v.0]).sum::<f64>()
    }

    /// Same expression with duplicate variables merged and zero terms dropped.
    pub fn merged(&self) -> LinExpr {
        let mut acc: BTreeMap<VarId, f64> = BTreeMap::new();
        for &(v, c) in &self.terms {
            *acc.entry(v).or_insert(0.0) += c;
        }
        LinExpr {
            terms: acc.into_iter().filter(|&(_, c)| c != 0.0).collect(),
            constant: self.constant,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.merged().terms.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// `Σ terms (sense) rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectiveSense {
    /// Constant objective: any feasible point is optimal.
    Feasibility,
    Maximize,
    Minimize,
}

/// Solver-neutral mixed-integer linear program.
#[derive(Clone, Debug, PartialEq)]
pub struct MilpModel {
    pub vars: Vec<Var>,
    pub constraints: Vec<Constraint>,
    pub sense: ObjectiveSense,
    pub objective: Vec<(VarId, f64)>,
    index: HashMap<String, VarId>,
}

impl Default for MilpModel {
    fn default() -> Self {
        MilpModel::new()
    }
}

impl MilpModel {
    /// Empty model holding only the constant variable `k_one`.
    pub fn new() -> MilpModel {
        let mut m = MilpModel {
            vars: Vec::new(),
            constraints: Vec::new(),
            sense: ObjectiveSense::Feasibility,
            objective: Vec::new(),
            index: HashMap::new(),
        };
        m.add_var("k_one", VarKind::Continuous, 1.0, 1.0, Role::One);
        m
    }

    pub fn one(&self) -> VarId {
        VarId(0)
    }

    pub fn add_var(&mut self, name: &str, kind: VarKind, lower: f64, upper: f64, role: Role) -> VarId {
        let id = VarId(self.vars.len());
        let prev = self.index.insert(name.to_string(), id);
        assert!(prev.is_none(), "duplicate variable name {name}");
        let (lower, upper) = if kind == VarKind::Binary { (0.0, 1.0) } else { (lower, upper) };
        self.vars.push(Var {
            name: name.to_string(),
            kind,
            lower,
            upper,
            role,
        });
        id
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.index.get(name).copied()
    }

    /// Adds `expr (sense) rhs`, moving the constant of `expr` to the right.
    pub fn add_constraint(&mut self, tag: &str, expr: &LinExpr, sense: Sense, rhs: f64) {
        let e = expr.merged();
        for &(v, _) in &e.terms {
            assert!(v.0 < self.vars.len(), "constraint references an undeclared variable");
        }
        let name = format!("{tag}_{}", self.constraints.len());
        self.constraints.push(Constraint {
            name,
            terms: e.terms,
            sense,
            rhs: rhs - e.constant,
        });
    }

    /// `lo <= expr <= hi`, as one equality when the bounds coincide. Infinite
    /// sides are skipped.
    pub fn add_range(&mut self, tag: &str, expr: &LinExpr, lo: f64, hi: f64) {
        if lo == hi {
            self.add_constraint(tag, expr, Sense::Eq, lo);
            return;
        }
        if lo.is_finite() {
            self.add_constraint(tag, expr, Sense::Ge, lo);
        }
        if hi.is_finite() {
            self.add_constraint(tag, expr, Sense::Le, hi);
        }
    }

    pub fn set_objective(&mut self, sense: ObjectiveSense, expr: &LinExpr) {
        self.sense = sense;
        self.objective = if sense == ObjectiveSense::Feasibility { Vec::new() } else { expr.merged().terms };
    }

    /// Descriptions of every bound, integrality or constraint violated by
    /// `values` beyond `tol`.
    pub fn violations(&self, values: &[f64], tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        for (v, &x) in self.vars.iter().zip(values) {
            if x < v.lower - tol || x > v.upper + tol || !x.is_finite() {
                out.push(format!("{} = {x} outside [{}, {}]", v.name, v.lower, v.upper));
            }
            if v.kind != VarKind::Continuous && (x - x.round()).abs() > tol {
                out.push(format!("{} = {x} is not integral", v.name));
            }
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|&(v, a)| a * values[v.0]).sum();
            let ok = match c.sense {
                Sense::Le => lhs <= c.rhs + tol,
                Sense::Ge => lhs >= c.rhs - tol,
                Sense::Eq => (lhs - c.rhs).abs() <= tol,
            };
            if !ok {
                out.push(format!("{}: lhs {lhs} vs rhs {}", c.name, c.rhs));
            }
        }
        out
    }
}

/// How one hidden ReLU unit is represented.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReluEncoding {
    /// Pre-activation never positive: output is 0.
    Zero,
    /// Pre-activation never negative: output equals it.
    Identity,
    /// `h ≥ z`, `h ≤ z − L(1 − δ)`, `h ≤ Uδ`, `0 ≤ h ≤ U`, δ binary.
    BigM { h: VarId, switch: VarId },
}

#[derive(Clone, Debug, PartialEq)]
pub struct HiddenUnit {
    pub layer: usize,
    pub unit: usize,
    pub pre: LinExpr,
    pub lower: f64,
    pub upper: f64,
    pub encoding: ReluEncoding,
}

impl HiddenUnit {
    /// The unit's output as an expression over model variables.
    pub fn output(&self) -> LinExpr {
        match self.encoding {
            ReluEncoding::Zero => LinExpr::default(),
            ReluEncoding::Identity => self.pre.clone(),
            ReluEncoding::BigM { h, .. } => LinExpr::var(h),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BuildOptions {
    /// Fixed heavy-atom count; needed when the predictor uses `ms_avg`.
    pub n: Option<usize>,
    /// Fixed hydrogen count; needed when the predictor uses `ms_avg`.
    pub nh: Option<usize>,
    pub objective: ObjectiveSense,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            n: None,
            nh: None,
            objective: ObjectiveSense::Feasibility,
        }
    }
}

/// A compiled instance: the MILP plus what is needed to decode and audit it.
#[derive(Clone, Debug)]
pub struct InverseModel {
    pub milp: MilpModel,
    pub spec: TopologicalSpec,
    pub layout: Layout,
    pub predictor: Predictor,
    pub rho: usize,
    pub options: BuildOptions,
    /// `slots[k][t - 1]`: internal vertex `t` of typical edge `k` is used.
    pub slots: Vec<Vec<VarId>>,
    /// `(catalog entry, var)` per vertex slot.
    pub fringe: Vec<Vec<(usize, VarId)>>,
    /// Multiplicity 1..=3 indicators per edge slot.
    pub mult: Vec<[VarId; 3]>,
    /// Product variables with the three factors they equal the product of.
    pub products: Vec<(VarId, [LinExpr; 3])>,
    pub hidden: Vec<HiddenUnit>,
    /// Predictor inputs in predictor order, as raw descriptor expressions.
    pub descriptors: Vec<(String, LinExpr)>,
    /// The prediction η̂ as an expression.
    pub output: LinExpr,
}

impl InverseModel {
    /// Whether vertex slot `v` is used, as an expression.
    pub fn activation(&self, v: usize) -> LinExpr {
        match self.layout.vertices[v].kind {
            SlotKind::Seed(_) => LinExpr::constant(1.0),
            SlotKind::Path { typical, t } => LinExpr::var(self.slots[typical][t - 1]),
        }
    }

    /// Whether edge slot `s` is present, as an expression.
    pub fn presence(&self, s: usize) -> LinExpr {
        presence(&self.layout, &self.slots, s)
    }
}

fn presence(layout: &Layout, slots: &[Vec<VarId>], s: usize) -> LinExpr {
    use super::spec::EdgeSlotKind::*;
    let a = |k: usize, t: usize| -> LinExpr {
        if t == 0 {
            LinExpr::constant(1.0)
        } else if t > slots[k].len() {
            LinExpr::default()
        } else {
            LinExpr::var(slots[k][t - 1])
        }
    };
    match layout.edges[s].kind {
        Fixed => LinExpr::constant(1.0),
        Forward { typical, t } => a(typical, t),
        Closing { typical, t } => {
            let mut e = a(typical, t);
            e.add(&a(typical, t + 1), -1.0);
            e
        }
    }
}

struct Builder<'a> {
    spec: &'a TopologicalSpec,
    layout: Layout,
    rho: usize,
    opts: &'a BuildOptions,
    m: MilpModel,
    slots: Vec<Vec<VarId>>,
    fringe: Vec<Vec<(usize, VarId)>>,
    mult: Vec<[VarId; 3]>,
    products: Vec<(VarId, [LinExpr; 3])>,
    product_cache: HashMap<(usize, String), Option<VarId>>,
}

fn not_expressible(name: &str, reason: &str) -> InverseError {
    InverseError::NotExpressible {
        name: name.to_string(),
        reason: reason.to_string(),
    }
}

impl Builder<'_> {
    fn structure(&mut self) {
        for (k, &(lb, ub)) in self.layout.lengths.clone().iter().enumerate() {
            let vars: Vec<VarId> = (1..ub)
                .map(|t| self.m.add_var(&format!("a_{k}_{t}"), VarKind::Binary, 0.0, 1.0, Role::Slot { typical: k, t }))
                .collect();
            for w in vars.windows(2) {
                let mut e = LinExpr::var(w[0]);
                e.add_term(w[1], -1.0);
                self.m.add_constraint("ord", &e, Sense::Ge, 0.0);
            }
            if lb > 1 {
                let e = LinExpr {
                    terms: vars.iter().map(|&v| (v, 1.0)).collect(),
                    constant: 0.0,
                };
                self.m.add_constraint("len", &e, Sense::Ge, (lb - 1) as f64);
            }
            self.slots.push(vars);
        }

        for v in 0..self.layout.vertices.len() {
            let d = self.layout.vertices[v].in_degree as u32;
            let vars: Vec<(usize, VarId)> = self
                .layout
                .allowed_entries(self.spec, v, self.rho)
                .into_iter()
                .filter(|&i| (d..=3 * d).contains(&self.spec.catalog[i].residual))
                .map(|i| (i, self.m.add_var(&format!("f_{v}_{i}"), VarKind::Binary, 0.0, 1.0, Role::Fringe { vertex: v, entry: i })))
                .collect();
            let mut e = LinExpr {
                terms: vars.iter().map(|&(_, x)| (x, 1.0)).collect(),
                constant: 0.0,
            };
            e.add(&self.activation(v), -1.0);
            self.m.add_constraint("one", &e, Sense::Eq, 0.0);
            self.fringe.push(vars);
        }

        for s in 0..self.layout.edges.len() {
            let ids = [1u8, 2, 3].map(|k| self.m.add_var(&format!("m_{s}_{k}"), VarKind::Binary, 0.0, 1.0, Role::Mult { edge: s, order: k }));
            let mut e = LinExpr {
                terms: ids.iter().map(|&x| (x, 1.0)).collect(),
                constant: 0.0,
            };
            e.add(&presence(&self.layout, &self.slots, s), -1.0);
            self.m.add_constraint("mul", &e, Sense::Eq, 0.0);
            self.mult.push(ids);
        }

        // Interior bond orders at each root use up exactly the residual
        // valence left by its fringe tree.
        for v in 0..self.layout.vertices.len() {
            let mut e = LinExpr::default();
            for (s, slot) in self.layout.edges.iter().enumerate() {
                if slot.a == v || slot.b == v {
                    for (k, &x) in self.mult[s].iter().enumerate() {
                        e.add_term(x, (k + 1) as f64);
                    }
                }
            }
            for &(i, x) in &self.fringe[v] {
                e.add_term(x, -(self.spec.catalog[i].residual as f64));
            }
            self.m.add_constraint("val", &e, Sense::Eq, 0.0);
        }
    }

    fn activation(&self, v: usize) -> LinExpr {
        match self.layout.vertices[v].kind {
            SlotKind::Seed(_) => LinExpr::constant(1.0),
            SlotKind::Path { typical, t } => LinExpr::var(self.slots[typical][t - 1]),
        }
    }

    fn sum_fringe(&self, weight: impl Fn(usize, usize) -> f64) -> LinExpr {
        let mut e = LinExpr::default();
        for (v, vars) in self.fringe.iter().enumerate() {
            for &(i, x) in vars {
                let w = weight(v, i);
                if w != 0.0 {
                    e.add_term(x, w);
                }
            }
        }
        e
    }

    fn slot_total(&self) -> LinExpr {
        let mut e = LinExpr::constant(self.spec.vertices.len() as f64);
        for vars in &self.slots {
            for &x in vars {
                e.add_term(x, 1.0);
            }
        }
        e
    }

    fn n_expr(&self) -> LinExpr {
        let mut e = self.slot_total();
        e.add(&self.sum_fringe(|_, i| (self.spec.catalog[i].tree.heavy_count() - 1) as f64), 1.0);
        e
    }

    fn nh_expr(&self) -> LinExpr {
        self.sum_fringe(|_, i| self.spec.catalog[i].tree.hydrogen_count() as f64)
    }

    fn elem_expr(&self, el: Element) -> LinExpr {
        self.sum_fringe(|_, i| {
            let c = &self.spec.catalog[i];
            (usize::from(c.element() == el) + c.nonroot_count(el)) as f64
        })
    }

    /// Vertex `v` holds element `el` with full degree `d`.
    fn type_expr(&self, v: usize, el: Element, d: usize) -> LinExpr {
        let din = self.layout.vertices[v].in_degree;
        let mut e = LinExpr::default();
        for &(i, x) in &self.fringe[v] {
            let c = &self.spec.catalog[i];
            if c.element() == el && din + c.child_count() == d {
                e.add_term(x, 1.0);
            }
        }
        e
    }

    fn product(&mut self, s: usize, key: String, factors: [LinExpr; 3]) -> Option<VarId> {
        if let Some(&hit) = self.product_cache.get(&(s, key.clone())) {
            return hit;
        }
        let made = if factors.iter().any(LinExpr::is_constant) {
            None
        } else {
            let y = self.m.add_var(
                &format!("y_{s}_{}", self.products.len()),
                VarKind::Continuous,
                0.0,
                1.0,
                Role::Product { edge: s, key: key.clone() },
            );
            let mut low = LinExpr::var(y);
            for f in &factors {
                let mut e = LinExpr::var(y);
                e.add(f, -1.0);
                self.m.add_constraint("prod", &e, Sense::Le, 0.0);
                low.add(f, -1.0);
            }
            self.m.add_constraint("prod", &low, Sense::Ge, -2.0);
            self.products.push((y, factors));
            Some(y)
        };
        self.product_cache.insert((s, key), made);
        made
    }

    fn ec_expr(&mut self, name: &str) -> Result<LinExpr, InverseError> {
        let (a, da, b, db, m) = parse_ec_key(name).ok_or_else(|| not_expressible(name, "malformed key"))?;
        let mut total = LinExpr::default();
        for s in 0..self.layout.edges.len() {
            let slot = self.layout.edges[s];
            let mul = LinExpr::var(self.mult[s][usize::from(m) - 1]);
            let mut orient = vec![(slot.a, slot.b, "f")];
            if (a, da) != (b, db) {
                orient.push((slot.b, slot.a, "r"));
            }
            for (x, y, tag) in orient {
                let fa = self.type_expr(x, a, da);
                let fb = self.type_expr(y, b, db);
                if let Some(p) = self.product(s, format!("{name}:{tag}"), [fa, fb, mul.clone()]) {
                    total.add_term(p, 1.0);
                }
            }
        }
        Ok(total)
    }

    fn descriptor(&mut self, name: &str) -> Result<LinExpr, InverseError> {
        let spec = self.spec;
        let suffix_num = |p: &str| name.strip_prefix(p).and_then(|r| r.parse::<usize>().ok());
        let suffix_elem = |p: &str| name.strip_prefix(p).and_then(|r| r.parse::<Element>().ok());
        if name == "n" {
            return Ok(self.n_expr());
        }
        if name == "rank" {
            return Ok(LinExpr::constant(spec.rank() as f64));
        }
        if name == "n_in" {
            return Ok(self.slot_total());
        }
        if name == "ms_avg" {
            let (Some(n), Some(nh)) = (self.opts.n, self.opts.nh) else {
                return Err(not_expressible(name, "the average mass needs fixed n and nH"));
            };
            let denom = (n + nh) as f64;
            return Ok(self.sum_fringe(|_, i| f64::from(spec.catalog[i].tree.mass_x10()) / denom));
        }
        if let Some(d) = suffix_num("dg_in_") {
            if !(1..=4).contains(&d) {
                return Err(not_expressible(name, "degree outside 1..=4"));
            }
            let mut e = LinExpr::default();
            for (v, slot) in self.layout.vertices.iter().enumerate() {
                if slot.in_degree == d {
                    e.add(&self.activation(v), 1.0);
                }
            }
            return Ok(e);
        }
        if let Some(d) = suffix_num("dg_") {
            if !(1..=4).contains(&d) {
                return Err(not_expressible(name, "degree outside 1..=4"));
            }
            let layout = &self.layout;
            return Ok(self.sum_fringe(|v, i| (layout.vertices[v].in_degree + spec.catalog[i].child_count() == d) as u8 as f64));
        }
        if let Some(m) = suffix_num("bd_in_") {
            if !(2..=3).contains(&m) {
                return Err(not_expressible(name, "only double and triple bonds are counted"));
            }
            let mut e = LinExpr::default();
            for ids in &self.mult {
                e.add_term(ids[m - 1], 1.0);
            }
            return Ok(e);
        }
        if let Some(el) = suffix_elem("na_in_") {
            return Ok(self.sum_fringe(|_, i| (spec.catalog[i].element() == el) as u8 as f64));
        }
        if let Some(el) = suffix_elem("na_ex_") {
            return Ok(self.sum_fringe(|_, i| spec.catalog[i].nonroot_count(el) as f64));
        }
        if name.starts_with("ec_in_") {
            return self.ec_expr(name);
        }
        if name.starts_with("ac_lf_") {
            return Ok(self.sum_fringe(|_, i| spec.catalog[i].ac_counts().get(name).copied().unwrap_or(0) as f64));
        }
        if name.starts_with("fc_") {
            return Ok(self.sum_fringe(|_, i| (fc_key(&spec.catalog[i].code) == name) as u8 as f64));
        }
        Err(not_expressible(name, "unknown descriptor"))
    }

    fn spec_bounds(&mut self) -> Result<(), InverseError> {
        let b = self.spec.bounds.clone();
        let f = |r: (usize, usize)| (r.0 as f64, r.1 as f64);
        if let Some(r) = b.n {
            let (lo, hi) = f(r);
            self.m.add_range("bnd_n", &self.n_expr(), lo, hi);
        }
        if let Some(r) = b.nh {
            let (lo, hi) = f(r);
            self.m.add_range("bnd_nh", &self.nh_expr(), lo, hi);
        }
        for (&el, &r) in &b.elem {
            let (lo, hi) = f(r);
            self.m.add_range("bnd_elem", &self.elem_expr(el), lo, hi);
        }
        for (key, &r) in b.ec.iter().chain(&b.ac) {
            let e = self.descriptor(key)?;
            let (lo, hi) = f(r);
            self.m.add_range("bnd_cfg", &e, lo, hi);
        }
        for (&m, &r) in &b.bd {
            let e = self.descriptor(&format!("bd_in_{m}"))?;
            let (lo, hi) = f(r);
            self.m.add_range("bnd_bd", &e, lo, hi);
        }
        if let Some(n) = self.opts.n {
            self.m.add_constraint("fix_n", &self.n_expr(), Sense::Eq, n as f64);
        }
        if let Some(nh) = self.opts.nh {
            self.m.add_constraint("fix_nh", &self.nh_expr(), Sense::Eq, nh as f64);
        }
        Ok(())
    }
}

/// Compiles a specification and a predictor into an [`InverseModel`].
///
/// Every typical edge gets binary activations for its possible internal
/// vertices; each used vertex picks one catalog tree and each present edge
/// one multiplicity; bond orders at a root must equal the valence left by
/// its tree. Descriptors are linear in these choices (edge configurations
/// through product indicators), so a linear predictor gives a linear
/// target; a ReLU network is encoded unit by unit with bounds from interval
/// arithmetic over normalized inputs in `[0, 1]`.
pub fn build_milp(spec: &TopologicalSpec, predictor: &Predictor, rho: usize, opts: &BuildOptions) -> Result<InverseModel, InverseError> {
    if rho < 1 {
        return Err(InverseError::Graph(crate::chemgraph::GraphError::BadRho));
    }
    if let Some(c) = spec.catalog.iter().find(|c| c.height() > rho) {
        return Err(InverseError::TallTree {
            id: c.id.clone(),
            height: c.height(),
            rho,
        });
    }
    let mut b = Builder {
        spec,
        layout: spec.layout(),
        rho,
        opts,
        m: MilpModel::new(),
        slots: Vec::new(),
        fringe: Vec::new(),
        mult: Vec::new(),
        products: Vec::new(),
        product_cache: HashMap::new(),
    };
    b.structure();
    b.spec_bounds()?;

    let names = predictor.names().to_vec();
    let bounds = predictor.bounds().clone();
    let mut descriptors = Vec::with_capacity(names.len());
    for n in &names {
        descriptors.push((n.clone(), b.descriptor(n)?));
    }
    // Normalized inputs z_j = (x_j − min_j) · scale_j.
    let inputs: Vec<LinExpr> = descriptors
        .iter()
        .enumerate()
        .map(|(j, (_, e))| {
            let s = bounds.scale(j);
            let mut z = LinExpr::default();
            if s != 0.0 {
                z.add(e, s);
                z.constant -= bounds.min[j] * s;
            }
            z
        })
        .collect();

    let mut hidden = Vec::new();
    let output = match predictor {
        Predictor::Linear(lm) => {
            let mut out = LinExpr::constant(lm.bias);
            for (w, z) in lm.weights.iter().zip(&inputs) {
                out.add(z, *w);
            }
            out
        }
        Predictor::Neural(nm) => {
            for (j, z) in inputs.iter().enumerate() {
                if bounds.scale(j) != 0.0 {
                    b.m.add_range("inp", z, 0.0, 1.0);
                }
            }
            let net = &nm.net;
            let mut act: Vec<LinExpr> = inputs.clone();
            let mut box_: Vec<(f64, f64)> = (0..inputs.len()).map(|j| (0.0, if bounds.scale(j) != 0.0 { 1.0 } else { 0.0 })).collect();
            let last = net.weights.len() - 1;
            let mut out = LinExpr::default();
            for (l, (w, bias)) in net.weights.iter().zip(&net.biases).enumerate() {
                let mut next = Vec::with_capacity(w.nrows());
                let mut next_box = Vec::with_capacity(w.nrows());
                for i in 0..w.nrows() {
                    let mut pre = LinExpr::constant(bias[i]);
                    let (mut lo, mut hi) = (bias[i], bias[i]);
                    for j in 0..w.ncols() {
                        let c = w[(i, j)];
                        pre.add(&act[j], c);
                        lo += (c * box_[j].0).min(c * box_[j].1);
                        hi += (c * box_[j].0).max(c * box_[j].1);
                    }
                    if l == last {
                        out = pre;
                        continue;
                    }
                    let encoding = if hi <= 0.0 {
                        ReluEncoding::Zero
                    } else if lo >= 0.0 {
                        ReluEncoding::Identity
                    } else {
                        let h = b.m.add_var(&format!("h_{l}_{i}"), VarKind::Continuous, 0.0, hi, Role::Hidden { layer: l, unit: i });
                        let d = b.m.add_var(&format!("d_{l}_{i}"), VarKind::Binary, 0.0, 1.0, Role::Switch { layer: l, unit: i });
                        let mut ge = LinExpr::var(h);
                        ge.add(&pre, -1.0);
                        b.m.add_constraint("relu", &ge, Sense::Ge, 0.0);
                        let mut le = ge.clone();
                        le.add_term(d, -lo);
                        b.m.add_constraint("relu", &le, Sense::Le, -lo);
                        let mut cap = LinExpr::var(h);
                        cap.add_term(d, -hi);
                        b.m.add_constraint("relu", &cap, Sense::Le, 0.0);
                        ReluEncoding::BigM { h, switch: d }
                    };
                    let unit = HiddenUnit {
                        layer: l,
                        unit: i,
                        pre,
                        lower: lo,
                        upper: hi,
                        encoding,
                    };
                    next.push(unit.output());
                    next_box.push(match encoding {
                        ReluEncoding::Zero => (0.0, 0.0),
                        ReluEncoding::Identity => (lo, hi),
                        ReluEncoding::BigM { .. } => (0.0, hi),
                    });
                    hidden.push(unit);
                }
                act = next;
                box_ = next_box;
            }
            out
        }
    };
    let (lo, hi) = spec.target;
    b.m.add_range("tgt", &output, lo, hi);
    b.m.set_objective(opts.objective, &output);

    Ok(InverseModel {
        milp: b.m,
        spec: spec.clone(),
        layout: b.layout,
        predictor: predictor.clone(),
        rho,
        options: opts.clone(),
        slots: b.slots,
        fringe: b.fringe,
        mult: b.mult,
        products: b.products,
        hidden,
        descriptors,
        output,
    })
}
