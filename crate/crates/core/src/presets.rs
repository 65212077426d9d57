//! Built-in MIMO array configurations used by the reproduction scenarios:
//! three 27-element virtual arrays synthesized from 3 transmitters and 9
//! receivers, together with the smoothing decompositions they ship with.
//!
//! `s1` is the dense baseline (contiguous virtual ULA). `s2` stretches
//! the receive grid to spacing 5, buying aperture at the cost of a
//! two-source ambiguity in its shift set. `s3` mixes a dense head with a
//! sparse tail, keeping both aperture and provable two-source
//! identifiability.

use crate::geometry::{Decomposition, MimoArrayPair, SensorPositions};

/// A named array configuration: physical transmit/receive arrays, their
/// virtual sum co-array, and the bundled smoothing decomposition.
#[derive(Debug, Clone)]
pub struct ArrayPreset {
    pub name: &'static str,
    pub mimo: MimoArrayPair,
    pub decomposition: Decomposition,
}

impl ArrayPreset {
    pub fn virtual_array(&self) -> &SensorPositions {
        self.decomposition.parent()
    }
}

fn build(
    name: &'static str,
    tx: Vec<i64>,
    rx: Vec<i64>,
    basic: Vec<i64>,
    shifts: Vec<i64>,
) -> ArrayPreset {
    let mimo = MimoArrayPair::new(
        SensorPositions::new(tx).unwrap(),
        SensorPositions::new(rx).unwrap(),
    );
    let parent = mimo.virtual_array();
    let decomposition = Decomposition::new(
        SensorPositions::new(basic).unwrap(),
        SensorPositions::new(shifts).unwrap(),
        parent,
    )
    .expect("preset decomposition is valid");
    ArrayPreset {
        name,
        mimo,
        decomposition,
    }
}

/// Dense baseline: rx {0,3,...,24}, tx {0,1,2}; virtual array {0..26},
/// smoothed as a 25-element ULA with shifts {0,1,2}.
pub fn s1() -> ArrayPreset {
    build(
        "s1",
        vec![0, 1, 2],
        (0..9).map(|k| 3 * k).collect(),
        (0..25).collect(),
        vec![0, 1, 2],
    )
}

/// Stretched grid: rx {0,5,...,40}, tx {0,1,2}; virtual array of 9 dense
/// triplets at spacing 5, smoothed by the first 7 triplets with shifts
/// {0,5,10}.
pub fn s2() -> ArrayPreset {
    build(
        "s2",
        vec![0, 1, 2],
        (0..9).map(|k| 5 * k).collect(),
        (0..7)
            .flat_map(|n| (0..3).map(move |k| 5 * n + k))
            .collect(),
        vec![0, 5, 10],
    )
}

/// Dense head, sparse tail: rx {0,3,6,9,12} u {21,30,39,48}, tx {0,1,2};
/// the basic subarray keeps a 13-element ULA head plus the tail anchors,
/// with shifts {0,1,2}.
pub fn s3() -> ArrayPreset {
    let mut rx: Vec<i64> = (0..5).map(|k| 3 * k).collect();
    rx.extend((0..4).map(|k| 21 + 9 * k));
    let mut basic: Vec<i64> = (0..=12).collect();
    basic.extend((0..4).map(|k| 21 + 9 * k));
    build("s3", vec![0, 1, 2], rx, basic, vec![0, 1, 2])
}

/// Look up a preset by its name (`s1`, `s2`, `s3`).
pub fn by_name(name: &str) -> Option<ArrayPreset> {
    match name {
        "s1" => Some(s1()),
        "s2" => Some(s2()),
        "s3" => Some(s3()),
        _ => None,
    }
}

pub fn all() -> Vec<ArrayPreset> {
    vec![s1(), s2(), s3()]
}
