use serde::{Deserialize, Serialize};

use crate::corpus::{EntitySpan, Sentence};
use crate::retrieval::KnowledgeContext;

pub const SEPARATOR: &str = "__SEP__";
pub const NO_KNOWLEDGE: &str = "No Wikidata/Wikipedia summary found";

/// Which knowledge sections follow the marked sentence.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AblationConfig {
    pub use_description: bool,
    pub use_arguments: bool,
    pub use_summary: bool,
}

const PRESETS: [(&str, AblationConfig); 6] = [
    ("context", AblationConfig::new(false, false, false)),
    ("context+description", AblationConfig::new(true, false, false)),
    ("context+arguments", AblationConfig::new(false, true, false)),
    ("context+summary", AblationConfig::new(false, false, true)),
    ("context+description+arguments", AblationConfig::new(true, true, false)),
    ("all", AblationConfig::new(true, true, true)),
];

impl AblationConfig {
    pub const fn new(use_description: bool, use_arguments: bool, use_summary: bool) -> Self {
        AblationConfig {
            use_description,
            use_arguments,
            use_summary,
        }
    }

    pub const CONTEXT_ONLY: AblationConfig = AblationConfig::new(false, false, false);
    pub const ALL: AblationConfig = AblationConfig::new(true, true, true);

    /// The six named knowledge combinations, in report order.
    pub fn presets() -> &'static [(&'static str, AblationConfig)] {
        &PRESETS
    }

    pub fn preset(name: &str) -> Option<AblationConfig> {
        PRESETS.iter().find(|(n, _)| *n == name).map(|(_, c)| *c)
    }
}

/// `relation: v1, v2; relation: v1`
pub fn render_arguments(ctx: &KnowledgeContext) -> String {
    ctx.arguments
        .iter()
        .map(|(rel, values)| format!("{rel}: {}", values.join(", ")))
        .collect::<Vec<_>>()
        .join("; ")
}

fn section(text: Option<String>) -> String {
    match text {
        Some(t) if !t.trim().is_empty() => t,
        _ => NO_KNOWLEDGE.to_string(),
    }
}

/// Marked sentence, then each enabled section (description, arguments,
/// summary) after ` __SEP__ `.
pub fn render_input(
    sentence: &Sentence,
    span: &EntitySpan,
    ctx: &KnowledgeContext,
    cfg: &AblationConfig,
) -> String {
    let mut out = sentence.marked_text(span);
    let found = |t: Option<String>| if ctx.found { t } else { None };
    let mut push = |text: String| {
        out.push(' ');
        out.push_str(SEPARATOR);
        out.push(' ');
        out.push_str(&text);
    };
    if cfg.use_description {
        push(section(found(ctx.description.clone())));
    }
    if cfg.use_arguments {
        push(section(found(Some(render_arguments(ctx)))));
    }
    if cfg.use_summary {
        push(section(found(ctx.summary.clone())));
    }
    out
}
