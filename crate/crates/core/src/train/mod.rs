//! Losses, the adversarial training loop and phoneme-predictor training.

pub mod losses;
mod optim;
mod phoneme;
mod synthesis;

pub use losses::LossWeights;
pub use optim::{Adam, OptimizerConfig};
pub use phoneme::{train_phoneme, PhonemeEpoch, PhonemeModel, PhonemeRun, PhonemeSample};
pub use synthesis::{validate, Networks, StepLosses, SynthesisModel, TrainSample, Trainer, TrainerState, Validation};
