//! Prompt templates shipped with the crate.
//!
//! Templates are plain text files under `assets/prompts/` with `{...}`
//! slots; rendering is literal slot substitution, nothing else.

pub const EXTRACT: &str = include_str!("../assets/prompts/extract.txt");
pub const CAUSAL: &str = include_str!("../assets/prompts/causal.txt");
pub const RERANK: &str = include_str!("../assets/prompts/rerank.txt");
pub const ANSWER: &str = include_str!("../assets/prompts/answer.txt");
pub const JUDGE: &str = include_str!("../assets/prompts/judge.txt");
pub const INTENT_SYSTEM: &str = include_str!("../assets/prompts/intent_system.txt");
pub const INTENT_USER: &str = include_str!("../assets/prompts/intent_user.txt");

/// Default keyword and prototype banks for intent routing.
pub const DEFAULT_BANKS: &str = include_str!("../assets/banks/intent_banks.json");

pub fn render_extract(chunk: &str) -> String {
    EXTRACT.replace("{chunk}", chunk)
}

pub fn render_causal(events: &str) -> String {
    CAUSAL.replace("{events}", events)
}

pub fn render_rerank(question: &str, snippets: &str) -> String {
    RERANK
        .replace("{question}", question)
        .replace("{snippets}", snippets)
}

pub fn render_answer(context: &str, question: &str) -> String {
    ANSWER
        .replace("{context}", context)
        .replace("{question}", question)
}

pub fn render_judge(question: &str, gold: &str, generated: &str) -> String {
    JUDGE
        .replace("{question}", question)
        .replace("{gold_answer}", gold)
        .replace("{generated_answer}", generated)
}

pub fn render_intent_user(query: &str) -> String {
    INTENT_USER.replace("{query}", query)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slots_are_filled() {
        let p = render_rerank("Q?", "[0] snip");
        assert!(p.contains("Question: Q?"));
        assert!(p.contains("[0] snip"));
        assert!(!p.contains("{question}"));
        assert!(!p.contains("{snippets}"));
        // The JSON example in the template must survive rendering.
        assert!(p.contains(r#"[{"index": 0, "score": 9}, {"index": 1, "score": 2}]"#));
    }

    #[test]
    fn all_templates_nonempty() {
        for t in [EXTRACT, CAUSAL, RERANK, ANSWER, JUDGE, INTENT_SYSTEM, INTENT_USER] {
            assert!(!t.trim().is_empty());
        }
    }
}
