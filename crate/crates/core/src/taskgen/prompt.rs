use crate::ingest::Resolution;

pub const IMAGE_TOKEN: &str = "<image>";

pub const SYSTEM_PREAMBLE: &str = "A chat between a curious user and an artificial intelligence \
assistant. The assistant gives helpful, detailed, and polite answers to the user's questions.";

pub const BOX_REQUEST: &str =
    "Please include bounding boxes of the form [x_min, y_min, x_max, y_max] in your response.";

/// Metadata actually injected into one prompt.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Injected {
    pub resolution: Option<Resolution>,
    pub sensor: Option<String>,
}

/// `This is a sequence of ... satellite images ...: Image 1: <image> ...`
pub fn sequence_sentence(n_images: usize, injected: &Injected) -> String {
    let mut s = String::from("This is a sequence of ");
    if let Some(r) = injected.resolution {
        s.push_str(&format!("{r} resolution, optical "));
    }
    s.push_str("satellite images");
    if let Some(sensor) = &injected.sensor {
        s.push_str(" from ");
        s.push_str(sensor);
    }
    s.push(':');
    for k in 1..=n_images {
        s.push_str(&format!(" Image {k}: {IMAGE_TOKEN}"));
    }
    s.push('.');
    s
}

/// The full first user turn: preamble, sequence sentence, instruction,
/// option list and box request.
pub fn user_turn(
    n_images: usize,
    injected: &Injected,
    instruction: &str,
    options: &[String],
    wants_boxes: bool,
) -> String {
    let mut s = format!(
        "{SYSTEM_PREAMBLE} USER: {} {instruction}",
        sequence_sentence(n_images, injected)
    );
    if !options.is_empty() {
        s.push_str(" Choose from: ");
        s.push_str(&options.join(", "));
        s.push('.');
    }
    if wants_boxes {
        s.push(' ');
        s.push_str(BOX_REQUEST);
    }
    s
}

/// Prompt text as fed to a model, ending in the assistant cue.
pub fn full_prompt(user_turn: &str) -> String {
    format!("{user_turn} ASSISTANT:")
}
