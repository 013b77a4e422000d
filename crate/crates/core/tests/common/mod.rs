#![allow(dead_code)]

use mec_placer::dataset::{synthesize, SynthParams};
use mec_placer::{BaseStation, GeoPoint, Topology};

pub fn station(id: u64, lat: f64, lon: f64, workload: f64) -> BaseStation {
    BaseStation {
        id,
        location: GeoPoint::new(lat, lon),
        workload,
    }
}

/// Topology over an explicit symmetric distance matrix.
pub fn from_matrix(rows: &[&[f64]], loads: &[f64], d_th: f64) -> Topology {
    let stations = loads
        .iter()
        .enumerate()
        .map(|(i, &w)| station(i as u64, 0.0, 0.0, w))
        .collect();
    let flat = rows.iter().flat_map(|r| r.iter().copied()).collect();
    Topology::from_distances(stations, flat, d_th, 15).unwrap()
}

/// Stations on a line (1-D positions in km), which gives an exact metric.
pub fn on_line(positions: &[f64], loads: &[f64], d_th: f64) -> Topology {
    let n = positions.len();
    let stations = loads
        .iter()
        .enumerate()
        .map(|(i, &w)| station(i as u64, 0.0, 0.0, w))
        .collect();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            d[i * n + j] = (positions[i] - positions[j]).abs();
        }
    }
    Topology::from_distances(stations, d, d_th, 15).unwrap()
}

pub fn synthetic(n: usize, seed: u64) -> Topology {
    let stations = synthesize(&SynthParams::new(n, seed)).unwrap();
    Topology::build(stations, 9.0, 15).unwrap()
}

/// The five-station example network: distances in km, threshold 7.
pub const FIVE: [[f64; 5]; 5] = [
    [0., 5., 8., 9., 4.],
    [5., 0., 3., 17., 2.],
    [8., 3., 0., 10., 14.],
    [9., 17., 10., 0., 20.],
    [4., 2., 14., 20., 0.],
];

pub fn five(loads: &[f64]) -> Topology {
    let rows: Vec<&[f64]> = FIVE.iter().map(|r| &r[..]).collect();
    from_matrix(&rows, loads, 7.0)
}
