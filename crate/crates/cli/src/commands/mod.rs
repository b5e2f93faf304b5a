pub mod audit;
pub mod continuation;
pub mod finetune;
pub mod lexicon;
pub mod report;
pub mod topics;
