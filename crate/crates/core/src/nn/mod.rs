//! Classifiers, their training loop, and architecture arithmetic.

pub mod arch;
pub mod model;
pub mod tensor;
pub mod train;

pub use arch::{count_parameters, infer_shapes, ArchitectureDescriptor, ArchitectureKind, LayerShape};
pub use model::{Mode, Model};
pub use tensor::{ParamSet, Tensor};
pub use train::{
    hyperparameter_sweep, run_callbacks, train, BestModelSave, Dataset, EarlyStopping, EpochMetrics, StopReason,
    SweepGrid, SweepOutcome, SweepRow, TrainConfig, TrainHistory,
};
