//! Prompt construction. The wording lives in versioned template constants;
//! tests pin the structure rather than the prose.

use crate::chunker::Chunk;
use crate::taxonomy::Taxonomy;

pub const TEMPLATE_VERSION: &str = "das-prompt/1";

const SYSTEM_TEMPLATE: &str = "\
You are a strict error correction tool for English written by language learners. \
You do not chat, explain yourself or add commentary. You analyze one piece of text \
and report every grammatical and spelling error in it.

Classify each error with the single most specific code from the error taxonomy below. \
Use taxonomy codes only: never invent a code or rename a category. Apply the \
taxonomy's hierarchy rules when two codes compete for the same words.

ERROR TAXONOMY:
{codes_text}
";

const USER_TEMPLATE: &str = "\
Analyze the following text.

TEXT:
{text}

Respond with exactly these lines and nothing else:
OT: <the original text, copied exactly>
Corrected: <the fully corrected text>
1st Error & Reason: <code>, <erroneous words>, <brief explanation>
2nd Error & Reason: <code>, <erroneous words>, <brief explanation>
(continue with 3rd, 4th, 5th and so on, one line per error)

If the text contains no errors, write the line [No errors] in place of the error lines.

Example of the exact format:
{example}";

/// The worked example embedded in every user prompt.
pub const FORMAT_EXAMPLE: &str = "\
OT: She go to school yesterday.
Corrected: She went to school yesterday.
1st Error & Reason: GS3, go, Present tense used for a completed past action
";

pub const DEFAULT_TEMPERATURE: f64 = 0.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PromptPair {
    pub system_text: String,
    pub user_text: String,
    /// In [0, 1].
    pub temperature: f64,
    pub model_hint: Option<String>,
}

pub fn build_system_prompt(tax: &Taxonomy) -> String {
    system_prompt_from_codes(&tax.to_json_string())
}

fn system_prompt_from_codes(codes_text: &str) -> String {
    SYSTEM_TEMPLATE.replace("{codes_text}", codes_text)
}

pub fn build_user_prompt(chunk: &Chunk) -> String {
    USER_TEMPLATE.replace("{example}", FORMAT_EXAMPLE).replacen("{text}", &chunk.text, 1)
}

/// Serializes the taxonomy once and reuses the system prompt for every chunk.
#[derive(Debug, Clone)]
pub struct PromptBuilder {
    system_text: String,
    temperature: f64,
    model_hint: Option<String>,
}

impl PromptBuilder {
    pub fn new(tax: &Taxonomy) -> Self {
        PromptBuilder { system_text: build_system_prompt(tax), temperature: DEFAULT_TEMPERATURE, model_hint: None }
    }

    /// Clamped to [0, 1].
    pub fn temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature.clamp(0.0, 1.0);
        self
    }

    pub fn model_hint(mut self, model: Option<String>) -> Self {
        self.model_hint = model;
        self
    }

    pub fn system_text(&self) -> &str {
        &self.system_text
    }

    pub fn build(&self, chunk: &Chunk) -> PromptPair {
        PromptPair {
            system_text: self.system_text.clone(),
            user_text: build_user_prompt(chunk),
            temperature: self.temperature,
            model_hint: self.model_hint.clone(),
        }
    }
}
