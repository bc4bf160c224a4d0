use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DatasetError;

/// Label used to fill frames where an arm performs no primitive.
pub const IDLE: &str = "Idle";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Verb {
    Grasp,
    Release,
    Touch,
    Untouch,
    Pull,
    Push,
    Idle,
}

impl Verb {
    /// All verbs in reporting order, Idle last.
    pub const ALL: [Verb; 7] = [
        Verb::Grasp,
        Verb::Release,
        Verb::Touch,
        Verb::Untouch,
        Verb::Pull,
        Verb::Push,
        Verb::Idle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Verb::Grasp => "Grasp",
            Verb::Release => "Release",
            Verb::Touch => "Touch",
            Verb::Untouch => "Untouch",
            Verb::Pull => "Pull",
            Verb::Push => "Push",
            Verb::Idle => IDLE,
        }
    }
}

impl FromStr for Verb {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Verb::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| DatasetError::InvalidMotionPrimitive(s.to_string()))
    }
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tool {
    Left,
    Right,
    None,
}

/// `verb(tool, object)`, e.g. `Grasp(L, Needle)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MotionPrimitive {
    pub verb: Verb,
    pub tool: Tool,
    pub object: String,
}

impl MotionPrimitive {
    pub fn idle() -> Self {
        MotionPrimitive {
            verb: Verb::Idle,
            tool: Tool::None,
            object: String::new(),
        }
    }

    pub fn is_idle(&self) -> bool {
        self.verb == Verb::Idle
    }

    /// Parses `Verb`, `Verb(tool)`, or `Verb(tool, object[, ...])`. The tool
    /// is `L`/`R` (or `Left`/`Right`); anything else in that slot is read as
    /// the start of the object with no tool.
    pub fn parse(label: &str) -> Result<Self, DatasetError> {
        let invalid = || DatasetError::InvalidMotionPrimitive(label.to_string());
        let label = label.trim();
        let (verb_part, args) = match label.find('(') {
            Some(open) => {
                let inner = label[open + 1..].strip_suffix(')').ok_or_else(invalid)?;
                (&label[..open], Some(inner))
            }
            None => (label, None),
        };
        let verb: Verb = verb_part.parse().map_err(|_| invalid())?;
        let mut tool = Tool::None;
        let mut object = String::new();
        if let Some(args) = args {
            let parts: Vec<&str> = args.split(',').map(str::trim).collect();
            let rest = match parts.first().map(|p| p.to_ascii_lowercase()).as_deref() {
                Some("l") | Some("left") => {
                    tool = Tool::Left;
                    &parts[1..]
                }
                Some("r") | Some("right") => {
                    tool = Tool::Right;
                    &parts[1..]
                }
                Some("") | Some("none") | Some("-") => &parts[1..],
                _ => &parts[..],
            };
            object = rest.join(",");
        }
        if verb == Verb::Idle && (tool != Tool::None || !object.is_empty()) {
            return Err(invalid());
        }
        Ok(MotionPrimitive { verb, tool, object })
    }
}

impl fmt::Display for MotionPrimitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_idle() {
            return f.write_str(IDLE);
        }
        let tool = match self.tool {
            Tool::Left => "L",
            Tool::Right => "R",
            Tool::None => "",
        };
        match (tool.is_empty(), self.object.is_empty()) {
            (true, true) => write!(f, "{}", self.verb),
            (false, true) => write!(f, "{}({})", self.verb, tool),
            (true, false) => write!(f, "{}({})", self.verb, self.object),
            (false, false) => write!(f, "{}({},{})", self.verb, tool, self.object),
        }
    }
}
