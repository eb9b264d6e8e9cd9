//! RGB raster images and PNG coding.

use crate::RenderError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<[u8; 3]>,
}

impl Raster {
    pub fn filled(width: u32, height: u32, color: [u8; 3]) -> Raster {
        Raster {
            width,
            height,
            pixels: vec![color; (width * height) as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        self.pixels[(y * self.width + x) as usize]
    }

    pub fn encode_png(&self) -> Vec<u8> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width, self.height);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().expect("in-memory PNG header");
            let flat: Vec<u8> = self.pixels.iter().flatten().copied().collect();
            w.write_image_data(&flat).expect("in-memory PNG data");
        }
        out
    }

    /// Decodes 8-bit RGB or RGBA PNG bytes; alpha is dropped.
    pub fn decode_png(bytes: &[u8]) -> Result<Raster, RenderError> {
        let bad = |e: &dyn std::fmt::Display| RenderError::Png(e.to_string());
        let dec = png::Decoder::new(std::io::Cursor::new(bytes));
        let mut reader = dec.read_info().map_err(|e| bad(&e))?;
        let mut buf = vec![0; reader.output_buffer_size().ok_or_else(|| bad(&"image too large"))?];
        let info = reader.next_frame(&mut buf).map_err(|e| bad(&e))?;
        if info.bit_depth != png::BitDepth::Eight {
            return Err(bad(&"only 8-bit images are supported"));
        }
        let step = match info.color_type {
            png::ColorType::Rgb => 3,
            png::ColorType::Rgba => 4,
            other => return Err(bad(&format!("unsupported color type {other:?}"))),
        };
        let pixels = buf[..info.buffer_size()]
            .chunks_exact(step)
            .map(|c| [c[0], c[1], c[2]])
            .collect();
        Ok(Raster {
            width: info.width,
            height: info.height,
            pixels,
        })
    }
}
