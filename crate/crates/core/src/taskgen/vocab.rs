//! Class vocabularies and the 3×3 image grid.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geom::BBox;

pub const DAMAGE_CLASSES: [&str; 4] = ["No damage", "Minor Damage", "Major Damage", "Destroyed"];

pub const DISASTERS: [&str; 7] = [
    "earthquake",
    "wildfire",
    "flood",
    "hurricane",
    "tornado",
    "tsunami",
    "volcanic eruption",
];

pub const QFABRIC_STATUS: [&str; 9] = [
    "Prior Construction",
    "Greenland",
    "Land Cleared",
    "Excavation",
    "Materials Dumped",
    "Construction Started",
    "Construction Midway",
    "Construction Done",
    "Operational",
];

pub const QFABRIC_CHANGE: [&str; 7] = [
    "No Change",
    "Residential",
    "Commercial",
    "Industrial",
    "Road",
    "Demolition",
    "Mega Projects",
];

pub const FMOW_CLASSES: [&str; 62] = [
    "Airport",
    "Airport hangar",
    "Airport terminal",
    "Amusement park",
    "Aquaculture",
    "Archaeological site",
    "Barn",
    "Border checkpoint",
    "Burial site",
    "Car dealership",
    "Construction site",
    "Crop field",
    "Dam",
    "Debris or rubble",
    "Educational institution",
    "Electric substation",
    "Factory or powerplant",
    "Fire station",
    "Flooded road",
    "Fountain",
    "Gas station",
    "Golf course",
    "Ground transportation station",
    "Helipad",
    "Hospital",
    "Impoverished settlement",
    "Interchange",
    "Lake or pond",
    "Lighthouse",
    "Military facility",
    "Multi-unit residential",
    "Nuclear powerplant",
    "Office building",
    "Oil or gas facility",
    "Park",
    "Parking lot or garage",
    "Place of worship",
    "Police station",
    "Port",
    "Prison",
    "Race track",
    "Railway bridge",
    "Recreational facility",
    "Road bridge",
    "Runway",
    "Shipyard",
    "Shopping mall",
    "Single-unit residential",
    "Smokestack",
    "Solar farm",
    "Space facility",
    "Stadium",
    "Storage tank",
    "Surface mine",
    "Swimming pool",
    "Toll booth",
    "Tower",
    "Tunnel opening",
    "Waste disposal",
    "Water treatment facility",
    "Wind farm",
    "Zoo",
];

/// Phrase for "the status became `s` since the previous image".
pub fn status_change_phrase(status: &str) -> &'static str {
    match status {
        "Prior Construction" => "construction was already present",
        "Greenland" => "the land became greenland",
        "Land Cleared" => "land was cleared",
        "Excavation" => "excavation began",
        "Materials Dumped" => "materials were dumped",
        "Construction Started" => "a construction project was begun",
        "Construction Midway" => "construction reached its midway point",
        "Construction Done" => "construction was finished",
        "Operational" => "the site became operational",
        _ => "the development status changed",
    }
}

pub fn options_string(options: &[&str]) -> String {
    options.join(", ")
}

/// Cells of the 3×3 grid, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridCell {
    TopLeft,
    TopCenter,
    TopRight,
    CenterLeft,
    Center,
    CenterRight,
    BottomLeft,
    BottomCenter,
    BottomRight,
}

impl GridCell {
    pub const ALL: [GridCell; 9] = [
        GridCell::TopLeft,
        GridCell::TopCenter,
        GridCell::TopRight,
        GridCell::CenterLeft,
        GridCell::Center,
        GridCell::CenterRight,
        GridCell::BottomLeft,
        GridCell::BottomCenter,
        GridCell::BottomRight,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GridCell::TopLeft => "top left",
            GridCell::TopCenter => "top center",
            GridCell::TopRight => "top right",
            GridCell::CenterLeft => "center left",
            GridCell::Center => "center",
            GridCell::CenterRight => "center right",
            GridCell::BottomLeft => "bottom left",
            GridCell::BottomCenter => "bottom center",
            GridCell::BottomRight => "bottom right",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Pixel window of the cell in a `width x height` frame. Boundaries
    /// are `floor(i * extent / 3)` so the nine cells partition the frame.
    pub fn window(self, width: u32, height: u32) -> BBox {
        let i = self.index() as u64;
        let (row, col) = (i / 3, i % 3);
        let (w, h) = (u64::from(width), u64::from(height));
        BBox {
            x_min: (col * w / 3) as u32,
            y_min: (row * h / 3) as u32,
            x_max: ((col + 1) * w / 3) as u32,
            y_max: ((row + 1) * h / 3) as u32,
        }
    }

    /// Cell containing the center of `b`.
    pub fn of_box(b: &BBox, width: u32, height: u32) -> GridCell {
        // Compare doubled coordinates to stay in integers.
        let cx = u64::from(b.x_min) + u64::from(b.x_max);
        let cy = u64::from(b.y_min) + u64::from(b.y_max);
        let pick = |c: u64, extent: u32| -> usize {
            let e = u64::from(extent);
            (0..3).rev().find(|&k| c >= 2 * (k * e / 3)).unwrap_or(0) as usize
        };
        GridCell::ALL[pick(cy, height) * 3 + pick(cx, width)]
    }
}

impl fmt::Display for GridCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const SMALL_NUMBERS: [&str; 21] = [
    "zero",
    "one",
    "two",
    "three",
    "four",
    "five",
    "six",
    "seven",
    "eight",
    "nine",
    "ten",
    "eleven",
    "twelve",
    "thirteen",
    "fourteen",
    "fifteen",
    "sixteen",
    "seventeen",
    "eighteen",
    "nineteen",
    "twenty",
];

/// Number as a word up to twenty, digits beyond.
pub fn number_word(n: usize) -> String {
    SMALL_NUMBERS
        .get(n)
        .map(|s| (*s).to_owned())
        .unwrap_or_else(|| n.to_string())
}

pub fn number_from_word(word: &str) -> Option<u32> {
    SMALL_NUMBERS
        .iter()
        .position(|w| w.eq_ignore_ascii_case(word))
        .map(|i| i as u32)
}

pub fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

pub fn with_article(noun: &str) -> String {
    let article = if noun.starts_with(['a', 'e', 'i', 'o', 'u']) {
        "an"
    } else {
        "a"
    };
    format!("{article} {noun}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocab_sizes() {
        assert_eq!(FMOW_CLASSES.len(), 62);
        let mut sorted = FMOW_CLASSES.to_vec();
        sorted.dedup();
        assert_eq!(sorted.len(), 62);
    }

    #[test]
    fn grid_partitions_frame() {
        let mut covered = vec![0u8; 224 * 224];
        for cell in GridCell::ALL {
            let w = cell.window(224, 224);
            for y in w.y_min..w.y_max {
                for x in w.x_min..w.x_max {
                    covered[(y * 224 + x) as usize] += 1;
                }
            }
        }
        assert!(covered.iter().all(|&c| c == 1));
    }

    #[test]
    fn box_cell_uses_center() {
        let b = BBox::new(0, 80, 20, 100).unwrap();
        assert_eq!(GridCell::of_box(&b, 224, 224), GridCell::CenterLeft);
        let b = BBox::new(200, 200, 224, 224).unwrap();
        assert_eq!(GridCell::of_box(&b, 224, 224), GridCell::BottomRight);
        // Center exactly on the first boundary (74) belongs to the second cell.
        let b = BBox::new(70, 0, 78, 10).unwrap();
        assert_eq!(GridCell::of_box(&b, 224, 224), GridCell::TopCenter);
    }

    #[test]
    fn words() {
        assert_eq!(number_word(5), "five");
        assert_eq!(number_word(25), "25");
        assert_eq!(number_from_word("Five"), Some(5));
        assert_eq!(with_article("earthquake"), "an earthquake");
        assert_eq!(capitalize("flood"), "Flood");
    }
}
