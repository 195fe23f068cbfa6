//! Fixture polygons shared by the unit tests.

use alloc::vec::Vec;

use crate::domain::Domain;
use crate::vec2::Point;

fn load(text: &str) -> Domain {
    let v: serde_json::Value = serde_json::from_str(text).unwrap();
    let vertices: Vec<Point> = v["vertices"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| Point::new(p[0].as_f64().unwrap(), p[1].as_f64().unwrap()))
        .collect();
    Domain::new(v["name"].as_str().unwrap(), vertices).unwrap()
}

pub fn square() -> Domain {
    load(include_str!("../../../fixtures/square.json"))
}

pub fn lshape() -> Domain {
    load(include_str!("../../../fixtures/lshape.json"))
}

pub fn ushape() -> Domain {
    load(include_str!("../../../fixtures/ushape.json"))
}

pub fn spiral() -> Domain {
    load(include_str!("../../../fixtures/spiral.json"))
}

pub fn blob() -> Domain {
    load(include_str!("../../../fixtures/blob64.json"))
}

pub fn all() -> Vec<Domain> {
    alloc::vec![square(), lshape(), ushape(), spiral(), blob()]
}

pub fn p(x: f64, y: f64) -> Point {
    Point::new(x, y)
}
