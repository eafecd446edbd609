//! Who answers the clarifying question.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::sync::Mutex;

use crate::map::ObjectAttributes;

/// Ground-truth attributes per object id.
pub type SceneAttributes = BTreeMap<String, ObjectAttributes>;

pub trait UserOracle: Send + Sync {
    /// `None` when no answer is available (closed input).
    fn answer(&self, question: &str, target: &str, scene: &SceneAttributes) -> Option<String>;
}

/// A cooperative user: whatever the question, describes the target with its
/// class and every feature from the attribute table.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScriptedOracle;

impl UserOracle for ScriptedOracle {
    fn answer(&self, _question: &str, target: &str, scene: &SceneAttributes) -> Option<String> {
        let Some(attrs) = scene.get(target) else {
            return Some("I am not sure.".into());
        };
        let mut words = attrs.features.clone();
        words.push(attrs.class_label.clone());
        Some(format!("It is the {}.", words.join(" ")))
    }
}

/// Reads the answer from a line-oriented stream (a terminal).
pub struct HumanOracle<R, W> {
    io: Mutex<(R, W)>,
}

impl<R: BufRead + Send, W: Write + Send> HumanOracle<R, W> {
    pub fn new(input: R, output: W) -> Self {
        Self {
            io: Mutex::new((input, output)),
        }
    }
}

impl<R: BufRead + Send, W: Write + Send> UserOracle for HumanOracle<R, W> {
    fn answer(&self, question: &str, _target: &str, _scene: &SceneAttributes) -> Option<String> {
        let mut guard = self.io.lock().ok()?;
        let (input, output) = &mut *guard;
        writeln!(output, "{question}").ok()?;
        write!(output, "> ").ok()?;
        output.flush().ok()?;
        let mut line = String::new();
        match input.read_line(&mut line) {
            Ok(0) | Err(_) => None,
            Ok(_) => Some(line.trim().to_string()),
        }
    }
}
