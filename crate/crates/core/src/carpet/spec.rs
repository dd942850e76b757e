//! Carpet definitions: the map list, corner labels, declared class, the
//! JSON format and the built-in carpets.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{parse_q, regular_polygon, PolygonFrame, Real, Similarity, Q};

/// Declared carpet class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeclaredClass {
    pub perfect: bool,
    pub bordered: bool,
}

/// An IFS on a regular polygon frame.
#[derive(Clone, Debug)]
pub struct CarpetSpec {
    pub name: Option<String>,
    pub frame: PolygonFrame,
    pub maps: Vec<Similarity>,
    /// 0-based vertex index -> index of the map fixing that vertex.
    pub corner_labels: BTreeMap<usize, usize>,
    pub declared: DeclaredClass,
}

#[derive(Debug, Deserialize, Serialize, Clone)]
#[serde(untagged)]
enum NumJson {
    Str(String),
    Float(f64),
}

#[derive(Debug, Deserialize, Serialize)]
struct PolygonJson {
    n0: usize,
}

#[derive(Debug, Deserialize, Serialize)]
struct MapJson {
    ratio: NumJson,
    sign: String,
    translation: [NumJson; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    corner_of: Option<usize>,
}

#[derive(Debug, Deserialize, Serialize)]
struct SpecJson {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    builtin: Option<String>,
    #[serde(default)]
    polygon: Option<PolygonJson>,
    #[serde(default)]
    maps: Vec<MapJson>,
    #[serde(default)]
    class: Vec<String>,
}

fn num_to_real(n: &NumJson) -> Result<Real> {
    match n {
        NumJson::Float(x) => Ok(Real::float(*x)),
        NumJson::Str(s) => {
            parse_q(s).map(Real::exact).ok_or_else(|| Error::InvalidSpec(format!("cannot parse rational {s:?}")))
        }
    }
}

fn real_to_num(r: &Real) -> NumJson {
    match r.exact {
        Some(q) if *q.denom() == 1 => NumJson::Str(q.numer().to_string()),
        Some(q) => NumJson::Str(format!("{}/{}", q.numer(), q.denom())),
        None => NumJson::Float(r.value),
    }
}

impl CarpetSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: SpecJson = serde_json::from_str(text)?;
        if let Some(b) = &raw.builtin {
            return builtin(b);
        }
        let n0 = raw.polygon.as_ref().ok_or_else(|| Error::InvalidSpec("missing \"polygon\"".into()))?.n0;
        let frame = regular_polygon(n0).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        let mut maps = Vec::new();
        let mut corner_labels = BTreeMap::new();
        for (i, m) in raw.maps.iter().enumerate() {
            let sign = match m.sign.as_str() {
                "+" => 1,
                "-" => -1,
                s => return Err(Error::InvalidSpec(format!("map {i}: sign {s:?}"))),
            };
            let ratio = num_to_real(&m.ratio)?;
            let t = [num_to_real(&m.translation[0])?, num_to_real(&m.translation[1])?];
            if let Some(c) = m.corner_of {
                if c == 0 || c > n0 {
                    return Err(Error::InvalidSpec(format!("map {i}: corner_of {c} out of range")));
                }
                if corner_labels.insert(c - 1, i).is_some() {
                    return Err(Error::InvalidSpec(format!("corner {c} labelled twice")));
                }
            }
            maps.push(Similarity::new(ratio, sign, t));
        }
        let mut declared = DeclaredClass::default();
        for c in &raw.class {
            match c.as_str() {
                "perfect" => declared.perfect = true,
                "bordered" => declared.bordered = true,
                other => return Err(Error::InvalidSpec(format!("unknown class {other:?}"))),
            }
        }
        Ok(CarpetSpec { name: raw.name, frame, maps, corner_labels, declared })
    }

    pub fn to_json(&self) -> String {
        let corner_of: BTreeMap<usize, usize> = self.corner_labels.iter().map(|(v, m)| (*m, *v + 1)).collect();
        let maps = self
            .maps
            .iter()
            .enumerate()
            .map(|(i, m)| MapJson {
                ratio: real_to_num(&m.ratio),
                sign: if m.sign > 0 { "+".into() } else { "-".into() },
                translation: [real_to_num(&m.translation[0]), real_to_num(&m.translation[1])],
                corner_of: corner_of.get(&i).copied(),
            })
            .collect();
        let mut class = Vec::new();
        if self.declared.perfect {
            class.push("perfect".to_string());
        }
        if self.declared.bordered {
            class.push("bordered".to_string());
        }
        let raw = SpecJson {
            name: self.name.clone(),
            builtin: None,
            polygon: Some(PolygonJson { n0: self.frame.n0 }),
            maps,
            class,
        };
        serde_json::to_string(&raw).expect("spec serializes")
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.maps.iter().map(|m| m.ratio.value).collect()
    }

    pub fn n(&self) -> usize {
        self.maps.len()
    }

    /// Index of the map with translation `(i/3, j/3)` in a grid carpet.
    pub fn grid_index(&self, i: i128, j: i128, k: i128) -> Option<usize> {
        let want = [Q::new(i, k), Q::new(j, k)];
        self.maps
            .iter()
            .position(|m| m.translation[0].exact == Some(want[0]) && m.translation[1].exact == Some(want[1]))
    }
}

fn grid_map(ratio: (i128, i128), tx: (i128, i128), ty: (i128, i128)) -> Similarity {
    Similarity::new(Real::ratio(ratio.0, ratio.1), 1, [Real::ratio(tx.0, tx.1), Real::ratio(ty.0, ty.1)])
}

/// Standard Sierpinski carpet: eight maps of ratio 1/3, row-major order
/// skipping the centre, so cell `(i,j)` has translation `(i/3, j/3)`.
pub fn sierpinski_carpet() -> CarpetSpec {
    let frame = regular_polygon(4).expect("square");
    let mut maps = Vec::new();
    let mut corner_labels = BTreeMap::new();
    for j in 0..3 {
        for i in 0..3 {
            if i == 1 && j == 1 {
                continue;
            }
            let idx = maps.len();
            match (i, j) {
                (0, 0) => corner_labels.insert(0, idx),
                (2, 0) => corner_labels.insert(1, idx),
                (2, 2) => corner_labels.insert(2, idx),
                (0, 2) => corner_labels.insert(3, idx),
                _ => None,
            };
            maps.push(grid_map((1, 3), (i, 3), (j, 3)));
        }
    }
    CarpetSpec {
        name: Some("sc".into()),
        frame,
        maps,
        corner_labels,
        declared: DeclaredClass { perfect: true, bordered: true },
    }
}

/// Hollow square carpet with distinct ratios: four corner squares of side
/// 1/3 and two squares of side 1/6 in the middle third of each side.
pub fn hollow_square_carpet() -> CarpetSpec {
    let frame = regular_polygon(4).expect("square");
    let mut maps = Vec::new();
    let mut corner_labels = BTreeMap::new();
    // corners, counter-clockwise from q_1
    let corners = [((0, 1), (0, 1)), ((2, 3), (0, 1)), ((2, 3), (2, 3)), ((0, 1), (2, 3))];
    for (k, (tx, ty)) in corners.iter().enumerate() {
        corner_labels.insert(k, maps.len());
        maps.push(grid_map((1, 3), *tx, *ty));
    }
    let sides = [
        ((1, 3), (0, 1)),
        ((1, 2), (0, 1)),
        ((5, 6), (1, 3)),
        ((5, 6), (1, 2)),
        ((1, 2), (5, 6)),
        ((1, 3), (5, 6)),
        ((0, 1), (1, 2)),
        ((0, 1), (1, 3)),
    ];
    for (tx, ty) in sides {
        maps.push(grid_map((1, 6), tx, ty));
    }
    CarpetSpec {
        name: Some("hsc".into()),
        frame,
        maps,
        corner_labels,
        declared: DeclaredClass { perfect: false, bordered: true },
    }
}

/// Sierpinski gasket: three corner maps of ratio 1/2 on the triangle.
pub fn sierpinski_gasket() -> CarpetSpec {
    let frame = regular_polygon(3).expect("triangle");
    let h = 3f64.sqrt() / 4.0;
    let maps = vec![
        Similarity::new(Real::ratio(1, 2), 1, [Real::ratio(0, 1), Real::ratio(0, 1)]),
        Similarity::new(Real::ratio(1, 2), 1, [Real::ratio(1, 2), Real::ratio(0, 1)]),
        Similarity::new(Real::ratio(1, 2), 1, [Real::ratio(1, 4), Real::float(h)]),
    ];
    let corner_labels = (0..3).map(|k| (k, k)).collect();
    CarpetSpec {
        name: Some("gasket".into()),
        frame,
        maps,
        corner_labels,
        declared: DeclaredClass { perfect: true, bordered: false },
    }
}

pub fn builtin(name: &str) -> Result<CarpetSpec> {
    match name {
        "sc" => Ok(sierpinski_carpet()),
        "hsc" => Ok(hollow_square_carpet()),
        "gasket" => Ok(sierpinski_gasket()),
        other => Err(Error::InvalidSpec(format!("unknown builtin {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        for s in [sierpinski_carpet(), hollow_square_carpet()] {
            let text = s.to_json();
            let back = CarpetSpec::from_json(&text).unwrap();
            assert_eq!(back.maps, s.maps);
            assert_eq!(back.corner_labels, s.corner_labels);
            assert_eq!(back.declared, s.declared);
        }
        let sc = CarpetSpec::from_json(r#"{"builtin": "sc"}"#).unwrap();
        assert_eq!(sc.n(), 8);
        assert!(CarpetSpec::from_json("{not json").is_err());
        assert!(CarpetSpec::from_json(r#"{"polygon": {"n0": 2}, "maps": []}"#).is_err());
    }

    #[test]
    fn parses_floats_and_rationals() {
        let t = r#"{"name": "x", "polygon": {"n0": 4},
            "maps": [{"ratio": "1/2", "sign": "+", "translation": ["0", 0.5], "corner_of": 1}],
            "class": ["bordered"]}"#;
        let s = CarpetSpec::from_json(t).unwrap();
        assert_eq!(s.maps[0].ratio.exact, Some(Q::new(1, 2)));
        assert_eq!(s.maps[0].translation[1].exact, None);
        assert_eq!(s.corner_labels.get(&0), Some(&0));
        assert!(s.declared.bordered && !s.declared.perfect);
    }
}
