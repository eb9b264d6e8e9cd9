use crate::ClientError;
use fnv::FnvHasher;
use seekcad_render::Raster;
use std::hash::Hasher;

pub trait EmbeddingClient: Send + Sync {
    fn name(&self) -> String;
    fn dimension(&self) -> usize;
    /// Unit-norm vector of length [`dimension`](Self::dimension).
    fn embed_text(&self, text: &str) -> Result<Vec<f64>, ClientError>;
}

pub trait ImageEmbedder: Send + Sync {
    fn name(&self) -> String;
    fn dimension(&self) -> usize;
    fn embed_image(&self, image: &Raster) -> Result<Vec<f64>, ClientError>;
}

/// Lower-cased alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Scales to unit length; an all-zero vector becomes the first basis vector.
fn unit_or_first_axis(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        v.iter_mut().for_each(|x| *x = 0.0);
        v[0] = 1.0;
    } else {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Feature-hashing text embedder over word unigrams and bigrams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashingEmbedder {
    pub dim: usize,
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        HashingEmbedder { dim: 256 }
    }
}

impl HashingEmbedder {
    fn add(&self, v: &mut [f64], feature: &str, weight: f64) {
        let mut h = FnvHasher::default();
        h.write(feature.as_bytes());
        let h = h.finish();
        let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
        v[(h % self.dim as u64) as usize] += sign * weight;
    }
}

impl EmbeddingClient for HashingEmbedder {
    fn name(&self) -> String {
        format!("hashing-{}", self.dim)
    }

    fn dimension(&self) -> usize {
        self.dim
    }

    fn embed_text(&self, text: &str) -> Result<Vec<f64>, ClientError> {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return Err(ClientError::EmbedderFailure("text has no words".into()));
        }
        let mut v = vec![0.0; self.dim];
        for t in &tokens {
            self.add(&mut v, t, 1.0);
        }
        for w in tokens.windows(2) {
            self.add(&mut v, &format!("{} {}", w[0], w[1]), 0.5);
        }
        Ok(unit_or_first_axis(v))
    }
}

/// 32 x 32 grayscale thumbnail, mean removed, scaled to unit length.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GrayEmbedder;

pub const THUMB: usize = 32;

impl ImageEmbedder for GrayEmbedder {
    fn name(&self) -> String {
        "gray-32".into()
    }

    fn dimension(&self) -> usize {
        THUMB * THUMB
    }

    fn embed_image(&self, image: &Raster) -> Result<Vec<f64>, ClientError> {
        let (w, h) = (image.width as usize, image.height as usize);
        if w == 0 || h == 0 {
            return Err(ClientError::EmbedderFailure("empty image".into()));
        }
        let cell = |i: usize, n: usize| {
            let a = (i * n / THUMB).min(n - 1);
            (a, ((i + 1) * n / THUMB).max(a + 1))
        };
        let mut v = Vec::with_capacity(THUMB * THUMB);
        for j in 0..THUMB {
            let (y0, y1) = cell(j, h);
            for i in 0..THUMB {
                let (x0, x1) = cell(i, w);
                let mut sum = 0.0;
                for y in y0..y1 {
                    for x in x0..x1 {
                        let [r, g, b] = image.pixels[y * w + x];
                        sum += 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64;
                    }
                }
                v.push(sum / ((y1 - y0) * (x1 - x0)) as f64);
            }
        }
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter_mut().for_each(|x| *x -= mean);
        Ok(unit_or_first_axis(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn text_embeddings_are_deterministic_unit_vectors() {
        let e = HashingEmbedder::default();
        let a = e.embed_text("A flange with four bolt holes").unwrap();
        assert_eq!(a, e.embed_text("A flange with four bolt holes").unwrap());
        assert_eq!(a.len(), 256);
        assert!((norm(&a) - 1.0).abs() < 1e-9);
        assert!((cosine(&a, &e.embed_text("a FLANGE, with four bolt-holes").unwrap()) - 1.0).abs() < 1e-12);
        assert!(e.embed_text(" ,.; ").is_err());
    }

    #[test]
    fn tokenizer_splits_on_non_alphanumerics() {
        assert_eq!(tokenize("L-bracket, 3x2 mm!"), ["l", "bracket", "3x2", "mm"]);
    }

    #[test]
    fn uniform_image_maps_to_first_axis() {
        let v = GrayEmbedder.embed_image(&Raster::filled(64, 64, [90, 90, 90])).unwrap();
        assert_eq!(v[0], 1.0);
        assert!(v[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn image_embedding_is_unit_and_tiny_images_work() {
        let mut r = Raster::filled(64, 48, [255, 255, 255]);
        for x in 0..20 {
            r.pixels[x] = [0, 0, 0];
        }
        let v = GrayEmbedder.embed_image(&r).unwrap();
        assert!((norm(&v) - 1.0).abs() < 1e-9);
        let t = GrayEmbedder.embed_image(&Raster::filled(5, 3, [1, 2, 3])).unwrap();
        assert_eq!(t.len(), 1024);
    }
}
