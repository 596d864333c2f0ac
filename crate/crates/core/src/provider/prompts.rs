//! Versioned prompt templates, one per remote capability, with `{{name}}`
//! placeholders.

use std::collections::BTreeMap;
use std::path::Path;

use super::{Capability, ProviderError};

pub const PROMPT_VERSION: &str = "v1";

const SHIPPED: [(Capability, &str); 5] = [
    (Capability::DraftQuest, include_str!("../../assets/prompts/draft_quest.v1.txt")),
    (Capability::AnalyzeCanvas, include_str!("../../assets/prompts/analyze_canvas.v1.txt")),
    (Capability::DraftFeedback, include_str!("../../assets/prompts/draft_feedback.v1.txt")),
    (Capability::DraftHelper, include_str!("../../assets/prompts/draft_helper.v1.txt")),
    (Capability::TransferStyle, include_str!("../../assets/prompts/transfer_style.v1.txt")),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub version: String,
    templates: BTreeMap<Capability, String>,
}

impl Default for PromptSet {
    fn default() -> Self {
        PromptSet {
            version: PROMPT_VERSION.into(),
            templates: SHIPPED.iter().map(|(c, t)| (*c, t.to_string())).collect(),
        }
    }
}

impl PromptSet {
    /// Reads `<capability>.<version>.txt` for every capability from `dir`.
    pub fn load_dir(dir: &Path, version: &str) -> Result<Self, String> {
        let mut templates = BTreeMap::new();
        for cap in Capability::ALL {
            let path = dir.join(format!("{}.{version}.txt", cap.name()));
            let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            templates.insert(cap, text);
        }
        Ok(PromptSet { version: version.into(), templates })
    }

    pub fn placeholders(&self, cap: Capability) -> Vec<String> {
        let text = self.templates.get(&cap).map(String::as_str).unwrap_or_default();
        let mut out = Vec::new();
        let mut rest = text;
        while let Some(open) = rest.find("{{") {
            let Some(close) = rest[open..].find("}}") else { break };
            out.push(rest[open + 2..open + close].trim().to_owned());
            rest = &rest[open + close + 2..];
        }
        out
    }

    /// Fills every placeholder of the capability's template from `vars`.
    pub fn render(&self, cap: Capability, vars: &[(&str, String)]) -> Result<String, ProviderError> {
        let mut text = self
            .templates
            .get(&cap)
            .cloned()
            .ok_or_else(|| ProviderError::NotConfigured(format!("no prompt for {}", cap.name())))?;
        for name in self.placeholders(cap) {
            let value = vars
                .iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| ProviderError::NotConfigured(format!("prompt slot `{name}` unset")))?;
            text = text.replace(&format!("{{{{{name}}}}}"), value);
        }
        Ok(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_prompts_render() {
        let prompts = PromptSet::default();
        assert_eq!(prompts.placeholders(Capability::DraftQuest), ["goal", "length"]);
        let text = prompts
            .render(Capability::DraftQuest, &[("goal", "tides".into()), ("length", "5".into())])
            .unwrap();
        assert!(text.contains("Learning goal: tides"));
        assert!(!text.contains("{{"));
        assert!(prompts.render(Capability::DraftQuest, &[]).is_err());
    }
}
