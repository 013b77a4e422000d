use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no stations given")]
    EmptyInput,
    #[error("station id {0} appears more than once")]
    DuplicateId(u64),
    #[error("station `{key}` reported at two locations: {first:?} and {second:?}")]
    InconsistentLocation {
        key: String,
        first: (f64, f64),
        second: (f64, f64),
    },
    #[error("every station was removed by preprocessing")]
    AllFiltered,
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("station {action} is not a neighbor of station {station}")]
    NotANeighbor { station: usize, action: usize },
    #[error("station {station} has workload {workload} above capacity {capacity}")]
    NoFeasibleAction {
        station: usize,
        workload: f64,
        capacity: f64,
    },
    #[error("server {server} would carry {load}, above capacity {capacity}")]
    CapacityExceeded {
        server: usize,
        load: f64,
        capacity: f64,
    },
    #[error("instance of {n} stations exceeds the exhaustive bound of {max}")]
    TooLarge { n: usize, max: usize },
    #[error("placement violates {0} constraint(s)")]
    InfeasiblePlacement(usize),
    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),
    #[error("malformed record: {0}")]
    Parse(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
