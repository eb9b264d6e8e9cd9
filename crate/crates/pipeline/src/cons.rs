//! The fixed system prompt: task statement, script reference and one worked example.

use seekcad_core::script::{lower, parse, ValueType, VOCABULARY};
use thiserror::Error;

pub const FUNCTIONALITY_HEADER: &str = "## Task";
pub const SCHEMA_HEADER: &str = "## Script reference";
pub const EXAMPLE_HEADER: &str = "## Example";

#[derive(Debug, Error, PartialEq)]
pub enum ConsError {
    #[error("knowledge constraint part {0} is empty")]
    EmptyPart(&'static str),
    #[error("example script does not build: {0}")]
    BadExample(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeConstraint {
    functionality: String,
    schema_doc: String,
    example_description: String,
    example_script: String,
}

const FUNCTIONALITY: &str = "\
You design mechanical parts by writing scripts in a small builder language. \
A part is a sequence of modeling steps. Each step draws closed loops on a sketch plane, \
sweeps the sketch into a solid with Extrude or Revolve, and may finish the solid with \
Chamfer, Fillet or Shell on edges and faces picked by tag. Steps are merged with union, \
cut or intersect.

Reason about the part one step at a time before writing code, using one short paragraph \
per modeling step. Then reply with the complete script inside a single ```python block. \
Assign the finished solid to a variable named `result`. Use only the builders listed below.";

const EXAMPLE_DESCRIPTION: &str = "\
A 2 x 1 x 0.5 plate with a round boss of radius 0.3 and height 0.4 centred on its top face; \
the top rim of the boss is chamfered by 0.05.";

const EXAMPLE_SCRIPT: &str = r#"outline = Loop().moveTo(0, 0).lineTo(2, 0).lineTo(2, 1).lineTo(0, 1).close()
plate = Profile("plate")
plate.addLoop(outline)
sk_plate = Sketch({"origin": [0, 0, 0], "x_axis": [1, 0, 0], "normal": [0, 0, 1]})
sk_plate.addProfile(plate)
base = Extrude(sk_plate, 0.5)

boss = Profile("boss")
boss.addLoop(Loop().moveTo(1, 0.5).circle(0.3).curveTag("rim"))
sk_boss = Sketch({"origin": [0, 0, 0.5], "x_axis": [1, 0, 0], "normal": [0, 0, 1]})
sk_boss.addProfile(boss)
post = Extrude(sk_boss, 0.4).Chamfer(0.05, [{"capType": "END", "referenceId": "rim"}])

result = base.union(post)
"#;

const SCHEMA_NOTES: &str = r#"
Values:
- Sketch plane: {"origin": [x, y, z], "x_axis": [x, y, z], "normal": [x, y, z]}; loop coordinates are 2D in that plane.
- Extrude distance: d along the normal, or (front, back) to extrude both ways.
- Revolve axis: {"point": [x, y, z], "direction": [x, y, z]}; angle in degrees, or (forward, backward).
- circle(r) is centred on the current point; threePointArc(p1, p2) passes through p1 and ends at p2.
- Tags: Profile("tag") names a profile, pointTag("tag") the current point, curveTag("tag") the last segment.
- Refinement targets: [{"capType": "START" | "END" | "SWEEP", "referenceId": "tag"}]. START is the sketch-side cap,
  END the far cap, SWEEP the side geometry swept from the tagged point or curve.
- Steps combine left to right: a.union(b), a.cut(b), a.intersect(b)."#;

/// Builder signatures, grouped by receiver.
pub fn vocabulary_reference() -> String {
    let mut out = String::from("Builders:\n");
    let groups: [(&str, Option<ValueType>); 5] = [
        ("constructors", None),
        ("on a Loop", Some(ValueType::Loop)),
        ("on a Profile", Some(ValueType::Profile)),
        ("on a Sketch", Some(ValueType::Sketch)),
        ("on a solid", Some(ValueType::Shape)),
    ];
    for (label, receiver) in groups {
        let sigs: Vec<String> = VOCABULARY
            .iter()
            .filter(|b| b.receiver == receiver)
            .map(|b| {
                let params = if b.variadic { format!("{}...", b.params[0]) } else { b.params.join(", ") };
                format!("{}({params})", b.name)
            })
            .collect();
        out.push_str(&format!("- {label}: {}\n", sigs.join(", ")));
    }
    out
}

impl KnowledgeConstraint {
    pub fn new(
        functionality: impl Into<String>,
        schema_doc: impl Into<String>,
        example_description: impl Into<String>,
        example_script: impl Into<String>,
    ) -> Result<Self, ConsError> {
        let c = KnowledgeConstraint {
            functionality: functionality.into(),
            schema_doc: schema_doc.into(),
            example_description: example_description.into(),
            example_script: example_script.into(),
        };
        for (name, part) in [
            ("functionality", &c.functionality),
            ("schema", &c.schema_doc),
            ("example description", &c.example_description),
            ("example script", &c.example_script),
        ] {
            if part.trim().is_empty() {
                return Err(ConsError::EmptyPart(name));
            }
        }
        let script = parse(&c.example_script).map_err(|d| ConsError::BadExample(d[0].to_string()))?;
        if let Some(w) = script.warnings.first() {
            return Err(ConsError::BadExample(w.to_string()));
        }
        lower(&script).map_err(|e| ConsError::BadExample(e.message))?;
        Ok(c)
    }

    pub fn shipped() -> Self {
        let schema = format!("{}{SCHEMA_NOTES}", vocabulary_reference());
        KnowledgeConstraint::new(FUNCTIONALITY, schema, EXAMPLE_DESCRIPTION, EXAMPLE_SCRIPT)
            .expect("shipped knowledge constraint is valid")
    }

    pub fn example_script(&self) -> &str {
        &self.example_script
    }

    pub fn system_prompt(&self) -> String {
        format!(
            "{FUNCTIONALITY_HEADER}\n{}\n\n{SCHEMA_HEADER}\n{}\n\n{EXAMPLE_HEADER}\nDescription: {}\n```python\n{}\n```\n",
            self.functionality.trim(),
            self.schema_doc.trim(),
            self.example_description.trim(),
            self.example_script.trim_end(),
        )
    }
}

impl Default for KnowledgeConstraint {
    fn default() -> Self {
        KnowledgeConstraint::shipped()
    }
}
