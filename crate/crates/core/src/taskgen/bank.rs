//! Paraphrase banks for description and caption answers. Slots are
//! `{name}` markers filled by [`fill`]. The first entry of each bank is
//! the canonical phrasing; the rest are added paraphrases.

use rand::Rng;

/// Damage-event summary; slots `a_d` (disaster with article), `A_d`
/// (capitalized) and `cn` (counted noun, e.g. `three buildings`).
pub const DAMAGE_SUMMARY: [&str; 8] = [
    "There has been {a_d} that has damaged {cn} in the area.",
    "{A_d} has affected this area, leaving {cn} damaged.",
    "The images show the aftermath of {a_d}, with {cn} damaged.",
    "After {a_d}, the second image shows {cn} with damage.",
    "Comparing the two images, {a_d} damaged {cn}.",
    "This area was hit by {a_d}, which damaged {cn}.",
    "Damage from {a_d} is visible on {cn}.",
    "{A_d} struck between the two images and damaged {cn}.",
];

/// No damage visible; slot `d` (disaster name).
pub const NO_DAMAGE_SUMMARY: [&str; 8] = [
    "No buildings in the area appear to have been damaged by the {d}.",
    "The {d} does not seem to have damaged any buildings here.",
    "Comparing the two images, no building damage from the {d} is visible.",
    "None of the buildings in this area show damage from the {d}.",
    "The buildings here appear intact after the {d}.",
    "There is no visible building damage from the {d} in this area.",
    "After the {d}, the buildings in the area look undamaged.",
    "This area shows no damaged buildings following the {d}.",
];

/// Building-change summary; slot `summary` (lower-case clause).
pub const CHANGE_SUMMARY: [&str; 8] = [
    "{Summary}.",
    "Between the two images, {summary}.",
    "Comparing the images, {summary}.",
    "In this area, {summary}.",
    "The images show that {summary}.",
    "Over the time between the images, {summary}.",
    "Looking at both images, {summary}.",
    "From the first image to the second, {summary}.",
];

/// Box listing appended to grounded descriptions; slots `what` and
/// `boxes`.
pub const GROUNDING_SUFFIX: [&str; 8] = [
    "The {what} are at {boxes}.",
    "The {what} are located at {boxes}.",
    "Locations of the {what}: {boxes}.",
    "The {what} can be found at {boxes}.",
    "The corresponding {what} are at {boxes}.",
    "Bounding boxes of the {what}: {boxes}.",
    "You can see the {what} at {boxes}.",
    "The {what} appear at {boxes}.",
];

/// Damage state of one building; slot `level` (`no damage`,
/// `minor damage`, `major damage`).
pub const BUILDING_LEVEL: [&str; 8] = [
    "The given building has {level}.",
    "This building shows {level}.",
    "The building at this location has {level}.",
    "Comparing the images, this building has {level}.",
    "After the disaster, the building has {level}.",
    "The second image shows this building with {level}.",
    "This structure has {level}.",
    "The building in this region has {level}.",
];

pub const BUILDING_DESTROYED: [&str; 8] = [
    "The given building has been destroyed.",
    "This building was destroyed.",
    "The building at this location has been destroyed.",
    "Comparing the images, this building was destroyed.",
    "After the disaster, the building has been destroyed.",
    "The second image shows this building destroyed.",
    "This structure has been destroyed.",
    "The building in this region was destroyed.",
];

/// Development history of a region; slot `story` (e.g. `was greenland at
/// first, and then became land cleared`).
pub const REGION_HISTORY: [&str; 8] = [
    "This region {story}.",
    "The area in this region {story}.",
    "Over the sequence, this region {story}.",
    "Looking across the images, this area {story}.",
    "In these images, the region {story}.",
    "This part of the image {story}.",
    "Across the sequence, the given area {story}.",
    "The selected region {story}.",
];

pub fn pick<'a, R: Rng + ?Sized>(bank: &[&'a str], rng: &mut R) -> &'a str {
    bank[rng.random_range(0..bank.len())]
}

/// Replaces every `{key}` with its value.
pub fn fill(template: &str, slots: &[(&str, &str)]) -> String {
    let mut out = template.to_owned();
    for (k, v) in slots {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}
