//! Synthetic data builders shared by the pipeline benchmarks.

use countcheck_core::coco::CountInstance;

pub const CATEGORIES: &[&str] = &[
    "person", "bicycle", "car", "motorcycle", "dog", "cat", "chair", "bottle", "cup", "book",
];

/// Deterministic synthetic counting dataset: `images` images with two
/// categories each, counts cycling 1..=9.
pub fn synthetic_dataset(images: u64) -> Vec<CountInstance> {
    let mut out = Vec::with_capacity(images as usize * 2);
    for image in 0..images {
        let a = (image as usize) % CATEGORIES.len();
        let b = (a + 1 + (image as usize / CATEGORIES.len()) % (CATEGORIES.len() - 1))
            % CATEGORIES.len();
        out.push(CountInstance {
            image_id: image,
            image_ref: format!("img{image:07}.jpg"),
            category: CATEGORIES[a].to_string(),
            count: 1 + (image % 9) as u32,
        });
        out.push(CountInstance {
            image_id: image,
            image_ref: format!("img{image:07}.jpg"),
            category: CATEGORIES[b].to_string(),
            count: 1 + ((image / 3) % 9) as u32,
        });
    }
    out
}
