//! Colour themes.
//!
//! Every built-in colour sits on the `{0, 128, 255}^3` lattice with the
//! mid-grey centre excluded, so any two named colours are at least 127 apart
//! in RGB and a noisy cell average never lands near a palette entry.

use serde::{Deserialize, Serialize};

pub type Rgb = [u8; 3];

pub const MIN_SEPARATION: f64 = 120.0;
pub const MIN_FLOW_COLORS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Palette {
    pub theme_id: String,
    pub background: Rgb,
    pub wall: Rgb,
    pub floor: Rgb,
    pub path: Rgb,
    pub start_marker: Rgb,
    pub goal_marker: Rgb,
    #[serde(rename = "box")]
    pub box_: Rgb,
    pub target: Rgb,
    pub player: Rgb,
    pub flow: Vec<Rgb>,
}

/// Every colour role a palette defines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColorRole {
    Background,
    Wall,
    Floor,
    Path,
    Start,
    Goal,
    Box,
    Target,
    Player,
    Flow(usize),
}

impl Palette {
    pub fn color(&self, role: ColorRole) -> Rgb {
        match role {
            ColorRole::Background => self.background,
            ColorRole::Wall => self.wall,
            ColorRole::Floor => self.floor,
            ColorRole::Path => self.path,
            ColorRole::Start => self.start_marker,
            ColorRole::Goal => self.goal_marker,
            ColorRole::Box => self.box_,
            ColorRole::Target => self.target,
            ColorRole::Player => self.player,
            ColorRole::Flow(i) => self.flow[i],
        }
    }

    pub fn roles(&self) -> impl Iterator<Item = ColorRole> + '_ {
        [
            ColorRole::Background,
            ColorRole::Wall,
            ColorRole::Floor,
            ColorRole::Path,
            ColorRole::Start,
            ColorRole::Goal,
            ColorRole::Box,
            ColorRole::Target,
            ColorRole::Player,
        ]
        .into_iter()
        .chain((0..self.flow.len()).map(ColorRole::Flow))
    }

    /// Nearest palette role to `rgb` among `candidates`, with its distance.
    pub fn nearest<I>(&self, rgb: [f64; 3], candidates: I) -> Option<(ColorRole, f64)>
    where
        I: IntoIterator<Item = ColorRole>,
    {
        candidates
            .into_iter()
            .map(|role| (role, rgb_distance(rgb, to_f64(self.color(role)))))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    pub fn min_pairwise_distance(&self) -> f64 {
        let colors: Vec<Rgb> = self.roles().map(|r| self.color(r)).collect();
        let mut best = f64::INFINITY;
        for (i, a) in colors.iter().enumerate() {
            for b in &colors[i + 1..] {
                best = best.min(rgb_distance(to_f64(*a), to_f64(*b)));
            }
        }
        best
    }

    pub fn builtin(theme_id: &str) -> Option<Palette> {
        BUILTIN.iter().find(|t| t.0 == theme_id).map(|t| t.build())
    }

    pub fn builtin_themes() -> Vec<Palette> {
        BUILTIN.iter().map(Theme::build).collect()
    }

    pub fn theme_ids() -> impl Iterator<Item = &'static str> {
        BUILTIN.iter().map(|t| t.0)
    }
}

pub fn to_f64(c: Rgb) -> [f64; 3] {
    [f64::from(c[0]), f64::from(c[1]), f64::from(c[2])]
}

pub fn rgb_distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

// Base-3 lattice codes: digit 0 -> 0, 1 -> 128, 2 -> 255.
struct Theme(&'static str, [&'static str; 9], [&'static str; 8]);

const BUILTIN: [Theme; 4] = [
    Theme(
        "classic",
        ["222", "000", "221", "200", "020", "002", "210", "022", "202"],
        ["220", "120", "012", "102", "201", "021", "100", "010"],
    ),
    Theme(
        "dusk",
        ["000", "222", "001", "220", "020", "200", "120", "012", "202"],
        ["002", "210", "022", "102", "201", "021", "122", "212"],
    ),
    Theme(
        "forest",
        ["121", "010", "222", "200", "002", "202", "100", "220", "000"],
        ["021", "012", "210", "201", "102", "022", "120", "112"],
    ),
    Theme(
        "ocean",
        ["012", "001", "122", "220", "020", "200", "210", "222", "202"],
        ["000", "002", "021", "102", "201", "100", "010", "212"],
    ),
];

fn lattice(code: &str) -> Rgb {
    let mut out = [0u8; 3];
    for (slot, ch) in out.iter_mut().zip(code.chars()) {
        *slot = match ch {
            '0' => 0,
            '1' => 128,
            _ => 255,
        };
    }
    out
}

impl Theme {
    fn build(&self) -> Palette {
        let n = self.1.map(lattice);
        Palette {
            theme_id: self.0.to_string(),
            background: n[0],
            wall: n[1],
            floor: n[2],
            path: n[3],
            start_marker: n[4],
            goal_marker: n[5],
            box_: n[6],
            target: n[7],
            player: n[8],
            flow: self.2.iter().map(|c| lattice(c)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_themes_are_separated() {
        let themes = Palette::builtin_themes();
        assert!(themes.len() >= 4);
        for p in &themes {
            assert!(p.flow.len() >= MIN_FLOW_COLORS);
            assert!(
                p.min_pairwise_distance() >= MIN_SEPARATION,
                "{} too close: {}",
                p.theme_id,
                p.min_pairwise_distance()
            );
            for role in p.roles() {
                assert_ne!(p.color(role), [128, 128, 128]);
            }
        }
    }

    #[test]
    fn lookup_by_id() {
        assert_eq!(Palette::builtin("dusk").unwrap().wall, [255, 255, 255]);
        assert!(Palette::builtin("neon").is_none());
    }

    #[test]
    fn nearest_picks_exact_match() {
        let p = Palette::builtin("classic").unwrap();
        let (role, d) = p.nearest(to_f64(p.path), p.roles()).unwrap();
        assert_eq!(role, ColorRole::Path);
        assert_eq!(d, 0.0);
    }
}
