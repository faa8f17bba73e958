//! Image value type, normalization, raw I/O and synthetic phantoms.

mod image;
mod io;
mod phantom;

pub use image::{normalize_unit, Image2D};
pub use io::{decode_image, encode_image, read_image, write_image, write_image_as, write_pgm, Dtype, RAW_HEADER_LEN, RAW_MAGIC};
pub use phantom::{make_phantom, make_subject, PhantomSpec};
