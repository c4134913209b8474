//! File formats: WAV audio plus compact binary containers for impulse
//! responses and estimated ANC filter sets.

mod pathbank;
mod wav;

pub use pathbank::{
    read_filter_set, read_path_bank, write_filter_set, write_path_bank, FILTER_MAGIC, PATH_MAGIC,
};
pub use wav::{read_wav, write_wav_f32, write_wav_i16, WavEncoding};
