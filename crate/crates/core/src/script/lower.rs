//! Evaluates a parsed script into an SSR model document.
//!
//! Builder objects live in an arena and are shared by reference, so
//! `face.addLoop(l)` mutates `face` just as a method call on a Python object
//! would. Loops, profiles and sketches are copied when they are added to their
//! parent or swept.

use super::{builder, Arg, Expr, ExprKind, Script, Span};
use crate::model::{
    planar, validate_doc, Axis, BooleanOp, CapType, CurveSegment, EntityRef, Extent, Loop, PlaneFrame, Point2,
    Point3, Profile, Refinement, RefinementKind, Sketch, SsrModelDoc, SsrTriplet, SweepFeature,
};
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {}, col {}: {message}", span.line, span.col)]
pub struct LoweringError {
    pub message: String,
    pub span: Span,
}

fn err<T>(span: Span, message: impl Into<String>) -> Result<T, LoweringError> {
    Err(LoweringError {
        message: message.into(),
        span,
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Val {
    Num(f64),
    Str(String),
    None,
    Bool(bool),
    Seq(Vec<Val>),
    Map(Vec<(String, Val)>),
    Obj(usize),
}

#[derive(Debug, Clone)]
struct LoopBuilder {
    lp: Loop,
    start: Option<Point2>,
    cur: Option<Point2>,
}

#[derive(Debug, Clone)]
struct ShapeBuilder {
    triplets: Vec<SsrTriplet>,
    ops: Vec<BooleanOp>,
    /// Used as the right operand of a boolean.
    consumed: bool,
}

impl ShapeBuilder {
    fn in_boolean(&self) -> bool {
        self.consumed || !self.ops.is_empty()
    }
}

#[derive(Debug, Clone)]
enum Obj {
    Loop(LoopBuilder),
    Profile(Profile),
    Sketch(Sketch),
    Shape(ShapeBuilder),
}

#[derive(Default)]
struct Machine {
    arena: Vec<Obj>,
    env: HashMap<String, Val>,
}

impl Machine {
    fn alloc(&mut self, o: Obj) -> Val {
        self.arena.push(o);
        Val::Obj(self.arena.len() - 1)
    }

    fn eval(&mut self, e: &Expr) -> Result<Val, LoweringError> {
        match &e.kind {
            ExprKind::Number { value, .. } => Ok(Val::Num(*value)),
            ExprKind::Str(s) => Ok(Val::Str(s.clone())),
            ExprKind::NoneLit => Ok(Val::None),
            ExprKind::Bool(b) => Ok(Val::Bool(*b)),
            ExprKind::Var(name) => match self.env.get(name) {
                Some(v) => Ok(v.clone()),
                None => err(e.span, format!("undefined identifier {name}")),
            },
            ExprKind::Tuple(items) | ExprKind::List(items) => {
                Ok(Val::Seq(items.iter().map(|i| self.eval(i)).collect::<Result<_, _>>()?))
            }
            ExprKind::Map(entries) => Ok(Val::Map(
                entries
                    .iter()
                    .map(|(k, v)| Ok((k.clone(), self.eval(v)?)))
                    .collect::<Result<_, LoweringError>>()?,
            )),
            ExprKind::Call { name, args } => {
                let vals = self.bind(&name.name, args, e.span)?;
                self.construct(&name.name, vals, e.span)
            }
            ExprKind::Method { recv, name, args } => {
                let r = self.eval(recv)?;
                let vals = self.bind(&name.name, args, e.span)?;
                let Val::Obj(id) = r else {
                    return err(recv.span, format!("`{}` needs a builder object receiver", name.name));
                };
                self.method(id, &name.name, vals, name.span)
            }
        }
    }

    /// Evaluates arguments into parameter order. Variadic builders get all
    /// positional values in slot 0 as a sequence.
    fn bind(&mut self, name: &str, args: &[Arg], span: Span) -> Result<Vec<Option<Val>>, LoweringError> {
        let Some(b) = builder(name) else {
            return err(span, format!("`{name}` is not part of the builder vocabulary"));
        };
        let mut slots: Vec<Option<Val>> = vec![None; b.params.len()];
        let mut positional = Vec::new();
        for a in args {
            let v = self.eval(&a.value)?;
            if let Some(k) = &a.keyword {
                let Some(i) = b.params.iter().position(|p| *p == k.name) else {
                    return err(k.span, format!("`{name}` has no parameter `{}`", k.name));
                };
                slots[i] = Some(v);
            } else if a.star {
                match v {
                    Val::Seq(items) => positional.extend(items),
                    _ => return err(a.value.span, "only a tuple or list can be unpacked with `*`"),
                }
            } else {
                positional.push(v);
            }
        }
        if b.variadic {
            if !positional.is_empty() {
                slots[0] = Some(Val::Seq(positional));
            }
        } else {
            if positional.len() > b.params.len() {
                return err(span, format!("`{name}` takes at most {} argument(s)", b.params.len()));
            }
            for (i, v) in positional.into_iter().enumerate() {
                if slots[i].is_some() {
                    return err(span, format!("`{}` given twice", b.params[i]));
                }
                slots[i] = Some(v);
            }
        }
        if let Some(i) = (0..b.required).find(|&i| slots[i].is_none()) {
            return err(span, format!("`{name}` is missing `{}`", b.params[i]));
        }
        Ok(slots)
    }

    fn construct(&mut self, name: &str, mut a: Vec<Option<Val>>, span: Span) -> Result<Val, LoweringError> {
        match name {
            "Loop" => Ok(self.alloc(Obj::Loop(LoopBuilder {
                lp: Loop {
                    segments: Vec::new(),
                    closed: false,
                    start_point_tag: None,
                },
                start: None,
                cur: None,
            }))),
            "Profile" => {
                let tag = match a[0].take() {
                    None | Some(Val::None) => None,
                    Some(Val::Str(s)) => Some(s),
                    Some(_) => return err(span, "a profile tag must be a string"),
                };
                Ok(self.alloc(Obj::Profile(Profile {
                    profile_tag: tag,
                    loops: Vec::new(),
                })))
            }
            "Sketch" => {
                let plane = plane(a[0].take().unwrap(), span)?;
                Ok(self.alloc(Obj::Sketch(Sketch {
                    plane,
                    profiles: Vec::new(),
                })))
            }
            "Extrude" | "Revolve" => {
                let sketch = match a[0].take().unwrap() {
                    Val::Obj(id) => match &self.arena[id] {
                        Obj::Sketch(s) => s.clone(),
                        _ => return err(span, format!("`{name}` needs a Sketch")),
                    },
                    _ => return err(span, format!("`{name}` needs a Sketch")),
                };
                let feature = if name == "Extrude" {
                    SweepFeature::extrude(extent(a[1].take().unwrap(), span)?)
                } else {
                    let axis = axis(a[1].take().unwrap(), span)?;
                    SweepFeature::revolve(axis, extent(a[2].take().unwrap(), span)?)
                };
                Ok(self.alloc(Obj::Shape(ShapeBuilder {
                    triplets: vec![SsrTriplet {
                        sketch,
                        feature,
                        refinements: Vec::new(),
                    }],
                    ops: Vec::new(),
                    consumed: false,
                })))
            }
            _ => err(span, format!("`{name}` is a method, not a constructor")),
        }
    }

    fn method(&mut self, id: usize, name: &str, mut a: Vec<Option<Val>>, span: Span) -> Result<Val, LoweringError> {
        let recv_kind = match &self.arena[id] {
            Obj::Loop(_) => "Loop",
            Obj::Profile(_) => "Profile",
            Obj::Sketch(_) => "Sketch",
            Obj::Shape(_) => "shape",
        };
        let wrong = || err(span, format!("`{name}` cannot be called on a {recv_kind}"));
        match name {
            "addLoop" => {
                let loops = self.children(a[0].take(), span, |o| match o {
                    Obj::Loop(l) => Some(finish_loop(l)),
                    _ => None,
                })?;
                let mut out = Vec::new();
                for l in loops {
                    out.push(l.map_err(|m| LoweringError { message: m, span })?);
                }
                let Obj::Profile(p) = &mut self.arena[id] else { return wrong() };
                p.loops.extend(out);
                Ok(Val::None)
            }
            "addProfile" => {
                let profiles = self.children(a[0].take(), span, |o| match o {
                    Obj::Profile(p) => Some(p.clone()),
                    _ => None,
                })?;
                let Obj::Sketch(s) = &mut self.arena[id] else { return wrong() };
                s.profiles.extend(profiles);
                Ok(Val::None)
            }
            "Chamfer" | "Fillet" | "Shell" => {
                let magnitude = num(a[0].take().unwrap(), span, "refinement size")?;
                let entities = entities(a[1].take().unwrap(), span)?;
                let kind = match name {
                    "Chamfer" => RefinementKind::Chamfer,
                    "Fillet" => RefinementKind::Fillet,
                    _ => RefinementKind::Shell,
                };
                let Obj::Shape(s) = &mut self.arena[id] else { return wrong() };
                if s.in_boolean() {
                    return err(span, "refinement after boolean");
                }
                s.triplets[0].refinements.push(Refinement {
                    kind,
                    magnitude,
                    entities,
                });
                Ok(Val::Obj(id))
            }
            "union" | "cut" | "intersect" => {
                let op = match name {
                    "union" => BooleanOp::Union,
                    "cut" => BooleanOp::Cut,
                    _ => BooleanOp::Intersect,
                };
                let Some(Val::Obj(other)) = a[0].take() else {
                    return err(span, format!("`{name}` needs a shape operand"));
                };
                if other == id {
                    return err(span, "a shape cannot be combined with itself");
                }
                let operand = match &mut self.arena[other] {
                    Obj::Shape(o) if !o.ops.is_empty() => {
                        return err(span, "nested boolean: the operand must be a single feature, not a boolean result")
                    }
                    Obj::Shape(o) => {
                        o.consumed = true;
                        o.triplets[0].clone()
                    }
                    _ => return err(span, format!("`{name}` needs a shape operand")),
                };
                let Obj::Shape(s) = &mut self.arena[id] else { return wrong() };
                s.triplets.push(operand);
                s.ops.push(op);
                Ok(Val::Obj(id))
            }
            _ => {
                let Obj::Loop(l) = &mut self.arena[id] else { return wrong() };
                loop_method(l, name, a, span)?;
                Ok(Val::Obj(id))
            }
        }
    }

    fn children<T>(
        &self,
        v: Option<Val>,
        span: Span,
        pick: impl Fn(&Obj) -> Option<T>,
    ) -> Result<Vec<T>, LoweringError> {
        let Some(Val::Seq(items)) = v else {
            return err(span, "nothing to add");
        };
        items
            .into_iter()
            .map(|v| match v {
                Val::Obj(i) => pick(&self.arena[i]).ok_or_else(|| LoweringError {
                    message: "argument has the wrong builder type".into(),
                    span,
                }),
                _ => err(span, "argument has the wrong builder type"),
            })
            .collect()
    }
}

fn finish_loop(l: &LoopBuilder) -> Result<Loop, String> {
    let mut lp = l.lp.clone();
    if lp.segments.is_empty() {
        return Err("loop has no curves".into());
    }
    if !lp.closed {
        match (l.cur, l.start) {
            (Some(c), Some(s)) if planar::close(c, s) => lp.closed = true,
            _ => return Err("loop is not closed; end it with close()".into()),
        }
    }
    Ok(lp)
}

fn loop_method(l: &mut LoopBuilder, name: &str, mut a: Vec<Option<Val>>, span: Span) -> Result<(), LoweringError> {
    let mut take = |i: usize| a[i].take().unwrap();
    let needs_start = |l: &LoopBuilder| -> Result<Point2, LoweringError> {
        if l.lp.closed {
            return err(span, format!("`{name}` after the loop was closed"));
        }
        l.cur.map_or_else(|| err(span, format!("`{name}` before moveTo")), Ok)
    };
    match name {
        "moveTo" => {
            if !l.lp.segments.is_empty() {
                return err(span, "moveTo after drawing; start a new Loop for another boundary");
            }
            let p = [num(take(0), span, "x")?, num(take(1), span, "y")?];
            l.start = Some(p);
            l.cur = Some(p);
        }
        "lineTo" => {
            let c = needs_start(l)?;
            let p = [num(take(0), span, "x")?, num(take(1), span, "y")?];
            l.lp.segments.push(CurveSegment::line(c, p));
            l.cur = Some(p);
        }
        "threePointArc" => {
            let c = needs_start(l)?;
            let m = point2(take(0), span)?;
            let p = point2(take(1), span)?;
            l.lp.segments.push(CurveSegment::arc(c, m, p));
            l.cur = Some(p);
        }
        "splineTo" => {
            let c = needs_start(l)?;
            let Val::Seq(items) = take(0) else { unreachable!() };
            let mut pts = vec![c];
            for v in items {
                pts.push(point2(v, span)?);
            }
            let end = *pts.last().unwrap();
            l.lp.segments.push(CurveSegment::spline(pts));
            l.cur = Some(end);
        }
        "circle" => {
            let c = needs_start(l)?;
            if !l.lp.segments.is_empty() {
                return err(span, "a circle must be the only curve of its loop");
            }
            let r = num(take(0), span, "radius")?;
            l.lp.segments.push(CurveSegment::circle(c, r));
            l.lp.closed = true;
        }
        "close" => {
            let c = needs_start(l)?;
            let s = l.start.unwrap();
            if l.lp.segments.is_empty() {
                return err(span, "close() on an empty loop");
            }
            if !planar::close(c, s) {
                l.lp.segments.push(CurveSegment::line(c, s));
            }
            l.cur = Some(s);
            l.lp.closed = true;
        }
        "pointTag" => {
            let tag = string(take(0), span)?;
            match l.lp.segments.last_mut() {
                Some(seg) => seg.end_point_tag = Some(tag),
                None if l.start.is_some() => l.lp.start_point_tag = Some(tag),
                None => return err(span, "pointTag before moveTo"),
            }
        }
        "curveTag" => {
            let tag = string(take(0), span)?;
            match l.lp.segments.last_mut() {
                Some(seg) => seg.curve_tag = Some(tag),
                None => return err(span, "curveTag before any curve"),
            }
        }
        _ => return err(span, format!("`{name}` cannot be called on a Loop")),
    }
    Ok(())
}

fn num(v: Val, span: Span, what: &str) -> Result<f64, LoweringError> {
    match v {
        Val::Num(x) => Ok(x),
        _ => err(span, format!("{what} must be a number")),
    }
}

fn string(v: Val, span: Span) -> Result<String, LoweringError> {
    match v {
        Val::Str(s) => Ok(s),
        _ => err(span, "a tag must be a string"),
    }
}

fn point2(v: Val, span: Span) -> Result<Point2, LoweringError> {
    match v {
        Val::Seq(items) if items.len() == 2 => Ok([
            num(items[0].clone(), span, "a coordinate")?,
            num(items[1].clone(), span, "a coordinate")?,
        ]),
        _ => err(span, "a 2D point must be a pair (x, y)"),
    }
}

fn point3(v: Val, span: Span, what: &str) -> Result<Point3, LoweringError> {
    match v {
        Val::Seq(items) if items.len() == 3 => {
            let mut p = [0.0; 3];
            for (i, x) in items.into_iter().enumerate() {
                p[i] = num(x, span, what)?;
            }
            Ok(p)
        }
        _ => err(span, format!("{what} must be a list of 3 numbers")),
    }
}

/// Rescales a direction to unit length unless it already is.
fn unit(v: Point3, span: Span, what: &str) -> Result<Point3, LoweringError> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if n < 1e-12 {
        return err(span, format!("{what} must not be zero"));
    }
    if (n - 1.0).abs() <= 1e-12 {
        return Ok(v);
    }
    Ok([v[0] / n, v[1] / n, v[2] / n])
}

fn fields(v: Val, span: Span, what: &str, keys: &[&str]) -> Result<Vec<Val>, LoweringError> {
    let Val::Map(entries) = v else {
        return err(span, format!("{what} must be a dict with keys {keys:?}"));
    };
    let mut out = vec![None; keys.len()];
    for (k, v) in entries {
        match keys.iter().position(|x| *x == k) {
            Some(i) => out[i] = Some(v),
            None => return err(span, format!("{what} has unknown key `{k}`")),
        }
    }
    out.into_iter()
        .zip(keys)
        .map(|(v, k)| v.ok_or_else(|| LoweringError {
            message: format!("{what} is missing `{k}`"),
            span,
        }))
        .collect()
}

fn plane(v: Val, span: Span) -> Result<PlaneFrame, LoweringError> {
    let mut f = fields(v, span, "plane", &["origin", "x_axis", "normal"])?.into_iter();
    Ok(PlaneFrame {
        origin: point3(f.next().unwrap(), span, "origin")?,
        x_axis: unit(point3(f.next().unwrap(), span, "x_axis")?, span, "x_axis")?,
        normal: unit(point3(f.next().unwrap(), span, "normal")?, span, "normal")?,
    })
}

fn axis(v: Val, span: Span) -> Result<Axis, LoweringError> {
    let mut f = fields(v, span, "axis", &["point", "direction"])?.into_iter();
    Ok(Axis {
        point: point3(f.next().unwrap(), span, "axis point")?,
        direction: unit(point3(f.next().unwrap(), span, "axis direction")?, span, "axis direction")?,
    })
}

fn extent(v: Val, span: Span) -> Result<Extent, LoweringError> {
    match v {
        Val::Num(x) => Ok(Extent::Single(x)),
        Val::Seq(items) if items.len() == 2 => Ok(Extent::Pair([
            num(items[0].clone(), span, "extent")?,
            num(items[1].clone(), span, "extent")?,
        ])),
        _ => err(span, "extent must be a number or a pair (forward, backward)"),
    }
}

fn entities(v: Val, span: Span) -> Result<Vec<EntityRef>, LoweringError> {
    let items = match v {
        Val::Seq(items) => items,
        m @ Val::Map(_) => vec![m],
        _ => return err(span, "entities must be a list of {\"capType\", \"referenceId\"} dicts"),
    };
    items
        .into_iter()
        .map(|item| {
            let mut f = fields(item, span, "entity", &["capType", "referenceId"])?.into_iter();
            let cap = string(f.next().unwrap(), span)?;
            let Some(cap_type) = CapType::parse(&cap.to_ascii_uppercase()) else {
                return err(span, format!("unknown capType `{cap}`; use START, END or SWEEP"));
            };
            Ok(EntityRef::new(cap_type, string(f.next().unwrap(), span)?))
        })
        .collect()
}

/// Lowers a parsed script. The model root is the shape bound to `result`,
/// or else the shape produced by the last statement that yields one.
pub fn lower(script: &Script) -> Result<SsrModelDoc, LoweringError> {
    let mut m = Machine::default();
    let mut root: Option<(usize, Span)> = None;
    let mut result_root: Option<(usize, Span)> = None;
    for s in &script.statements {
        let v = m.eval(&s.expr)?;
        if let Val::Obj(id) = v {
            if matches!(m.arena[id], Obj::Shape(_)) {
                root = Some((id, s.span));
            }
        }
        if let Some(t) = &s.target {
            if t.name == "result" {
                match v {
                    Val::Obj(id) if matches!(m.arena[id], Obj::Shape(_)) => result_root = Some((id, s.span)),
                    _ => return err(t.span, "`result` must be a shape"),
                }
            }
            m.env.insert(t.name.clone(), v);
        }
    }
    let Some((id, span)) = result_root.or(root) else {
        return err(Span::start(), "no model root");
    };
    let Obj::Shape(shape) = &m.arena[id] else { unreachable!() };
    let doc = SsrModelDoc {
        doc_id: "script".into(),
        description: None,
        triplets: shape.triplets.clone(),
        ops: shape.ops.clone(),
    };
    let report = validate_doc(&doc);
    if !report.is_valid() {
        return err(span, format!("invalid model: {}", report.messages().join("; ")));
    }
    Ok(doc)
}
