//! Grayscale image datasets laid out as one subdirectory per class.
//!
//! Ordering matters: the train/test protocol takes the *first* `n` images of
//! each class, so classes and files are both ordered by natural sort
//! (`2.pgm` before `10.pgm`).

use std::cmp::Ordering;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use image::DynamicImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Row-major grid of real-valued intensities in `[0, 255]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Domain(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::Domain(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        if let Some(p) = pixels.iter().find(|p| !(0.0..=255.0).contains(*p)) {
            return Err(Error::Domain(format!("pixel value {p} outside [0, 255]")));
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    /// Constant image, handy for tests and fixtures.
    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }
}

/// One image and its class index.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub image: GrayImage,
    pub class_id: usize,
}

/// Labeled images grouped by class, in source order within each class.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub samples: Vec<Sample>,
    class_names: Vec<String>,
}

impl LabeledDataset {
    /// Checks that every class is populated and all images share dimensions.
    pub fn new(samples: Vec<Sample>, class_names: Vec<String>) -> Result<Self> {
        let s = class_names.len();
        if s == 0 || samples.is_empty() {
            return Err(Error::Domain("dataset has no classes".into()));
        }
        let dims = samples[0].image.dims();
        let mut counts = vec![0usize; s];
        for sample in &samples {
            if sample.class_id >= s {
                return Err(Error::Domain(format!(
                    "class id {} out of range for {s} classes",
                    sample.class_id
                )));
            }
            if sample.image.dims() != dims {
                return Err(Error::Domain(format!(
                    "mixed image sizes: {:?} and {:?}",
                    dims,
                    sample.image.dims()
                )));
            }
            counts[sample.class_id] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::Domain(format!(
                "class {} has no samples",
                class_names[empty]
            )));
        }
        Ok(LabeledDataset {
            samples,
            class_names,
        })
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn per_class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.class_count()];
        for s in &self.samples {
            counts[s.class_id] += 1;
        }
        counts
    }

    pub fn image_dims(&self) -> (usize, usize) {
        self.samples[0].image.dims()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.class_id).collect()
    }
}

/// Number of leading samples per class that go to training.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitSpec {
    train_per_class: usize,
}

impl SplitSpec {
    pub fn new(train_per_class: usize) -> Result<Self> {
        if train_per_class == 0 {
            return Err(Error::InvalidParameter(
                "train_per_class must be at least 1".into(),
            ));
        }
        Ok(SplitSpec { train_per_class })
    }

    pub fn train_per_class(&self) -> usize {
        self.train_per_class
    }
}

/// ITU-R BT.601 luma, unrounded.
#[inline]
pub fn to_grayscale(r: f64, g: f64, b: f64) -> f64 {
    0.299 * r + 0.587 * g + 0.114 * b
}

/// Decodes a PGM (P2/P5), PNG or JPEG file into intensities in `[0, 255]`.
///
/// Colour inputs go through [`to_grayscale`]; 16-bit inputs are scaled down
/// by 257 so that 8-bit values survive a widening conversion exactly.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let reader = image::ImageReader::open(path)
        .map_err(|e| Error::ingestion(path, e.to_string()))?
        .with_guessed_format()
        .map_err(|e| Error::ingestion(path, e.to_string()))?;
    if reader.format().is_none() {
        return Err(Error::ingestion(path, "unsupported image format"));
    }
    let decoded = reader
        .decode()
        .map_err(|e| Error::ingestion(path, e.to_string()))?;
    let (width, height) = (decoded.width() as usize, decoded.height() as usize);

    let pixels: Vec<f64> = match &decoded {
        DynamicImage::ImageLuma8(buf) => buf.as_raw().iter().map(|&v| f64::from(v)).collect(),
        img if !img.color().has_color() => img
            .to_luma16()
            .as_raw()
            .iter()
            .map(|&v| f64::from(v) / 257.0)
            .collect(),
        img => img
            .to_rgb16()
            .as_raw()
            .chunks_exact(3)
            .map(|c| {
                let [r, g, b] = [c[0], c[1], c[2]].map(|v| f64::from(v) / 257.0);
                to_grayscale(r, g, b).clamp(0.0, 255.0)
            })
            .collect(),
    };
    GrayImage::new(width, height, pixels).map_err(|e| Error::ingestion(path, e.to_string()))
}

/// Bilinear resampling with pixel-centre alignment.
///
/// Output pixel `i` samples source coordinate `(i + 0.5) * src / dst - 0.5`,
/// clamped to the valid range.
pub fn resize_bilinear(img: &GrayImage, out_w: usize, out_h: usize) -> Result<GrayImage> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::Domain(format!(
            "resize target must be positive, got {out_w}x{out_h}"
        )));
    }
    if img.dims() == (out_w, out_h) {
        return Ok(img.clone());
    }
    let xs = sample_positions(img.width, out_w);
    let ys = sample_positions(img.height, out_h);

    let mut pixels = Vec::with_capacity(out_w * out_h);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let top = lerp(img.get(x0, y0), img.get(x1, y0), fx);
            let bottom = lerp(img.get(x0, y1), img.get(x1, y1), fx);
            pixels.push(lerp(top, bottom, fy).clamp(0.0, 255.0));
        }
    }
    GrayImage::new(out_w, out_h, pixels)
}

fn sample_positions(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    let max = (src - 1) as f64;
    (0..dst)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, max);
            let lo = s.floor() as usize;
            let hi = (lo + 1).min(src - 1);
            (lo, hi, s - lo as f64)
        })
        .collect()
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// Largest centred window of `img` with aspect ratio `w:h`.
pub fn center_crop_to_aspect(img: &GrayImage, w: usize, h: usize) -> Result<GrayImage> {
    if w == 0 || h == 0 {
        return Err(Error::Domain(format!(
            "aspect must be positive, got {w}:{h}"
        )));
    }
    let (src_w, src_h) = img.dims();
    // Compare src_w/src_h against w/h without division.
    let (crop_w, crop_h) = if src_w * h > src_h * w {
        (
            ((src_h * w) as f64 / h as f64).round().max(1.0) as usize,
            src_h,
        )
    } else {
        (
            src_w,
            ((src_w * h) as f64 / w as f64).round().max(1.0) as usize,
        )
    };
    if (crop_w, crop_h) == (src_w, src_h) {
        return Ok(img.clone());
    }
    let x_off = (src_w - crop_w) / 2;
    let y_off = (src_h - crop_h) / 2;
    let pixels = (y_off..y_off + crop_h)
        .flat_map(|y| (x_off..x_off + crop_w).map(move |x| (x, y)))
        .map(|(x, y)| img.get(x, y))
        .collect();
    GrayImage::new(crop_w, crop_h, pixels)
}

/// Compares strings treating runs of ASCII digits as integers.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (mut ai, mut bi) = (a.as_bytes(), b.as_bytes());
    loop {
        match (ai.first(), bi.first()) {
            (None, None) => return a.cmp(b),
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(ca), Some(cb)) if ca.is_ascii_digit() && cb.is_ascii_digit() => {
                let (da, ra) = split_digits(ai);
                let (db, rb) = split_digits(bi);
                let (ta, tb) = (trim_zeros(da), trim_zeros(db));
                let ord = ta.len().cmp(&tb.len()).then_with(|| ta.cmp(tb));
                if ord != Ordering::Equal {
                    return ord;
                }
                ai = ra;
                bi = rb;
            }
            (Some(ca), Some(cb)) => {
                if ca != cb {
                    return ca.cmp(cb);
                }
                ai = &ai[1..];
                bi = &bi[1..];
            }
        }
    }
}

fn split_digits(s: &[u8]) -> (&[u8], &[u8]) {
    let n = s.iter().take_while(|c| c.is_ascii_digit()).count();
    s.split_at(n)
}

fn trim_zeros(s: &[u8]) -> &[u8] {
    let n = s.iter().take_while(|&&c| c == b'0').count();
    &s[n..]
}

/// How [`load_dataset_with`] preprocesses each image.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LoadOptions {
    /// Target size; `None` keeps the native size, which must then be uniform.
    pub resize_to: Option<(usize, usize)>,
    /// Centre-crop to the target aspect ratio before resizing.
    pub center_crop: bool,
}

/// Loads `root/<class>/<image>` with every image resized to `resize_to`.
pub fn load_dataset(root: impl AsRef<Path>, resize_to: (usize, usize)) -> Result<LabeledDataset> {
    load_dataset_with(
        root,
        &LoadOptions {
            resize_to: Some(resize_to),
            center_crop: false,
        },
    )
}

pub fn load_dataset_with(root: impl AsRef<Path>, opts: &LoadOptions) -> Result<LabeledDataset> {
    let root = root.as_ref();
    let class_dirs = sorted_entries(root, |p| p.is_dir())?;
    if class_dirs.is_empty() {
        return Err(Error::ingestion(root, "no class subdirectories"));
    }

    let mut jobs = Vec::new();
    let mut class_names = Vec::with_capacity(class_dirs.len());
    for (class_id, dir) in class_dirs.iter().enumerate() {
        let files = sorted_entries(dir, |p| p.is_file())?;
        if files.is_empty() {
            return Err(Error::ingestion(dir, "class directory contains no images"));
        }
        class_names.push(file_name(dir));
        jobs.extend(files.into_iter().map(|f| (class_id, f)));
    }

    // par_iter preserves index order on collect, so the result equals the
    // sequential load.
    let samples = jobs
        .par_iter()
        .map(|(class_id, path)| {
            let image = preprocess(load_image(path)?, opts)
                .map_err(|e| Error::ingestion(path, e.to_string()))?;
            Ok(Sample {
                image,
                class_id: *class_id,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    LabeledDataset::new(samples, class_names).map_err(|e| Error::ingestion(root, e.to_string()))
}

fn preprocess(img: GrayImage, opts: &LoadOptions) -> Result<GrayImage> {
    match opts.resize_to {
        Some((w, h)) => {
            let img = if opts.center_crop {
                center_crop_to_aspect(&img, w, h)?
            } else {
                img
            };
            resize_bilinear(&img, w, h)
        }
        None => Ok(img),
    }
}

/// Non-hidden entries of `dir` accepted by `keep`, in natural order.
fn sorted_entries(dir: &Path, keep: impl Fn(&Path) -> bool) -> Result<Vec<PathBuf>> {
    let read = fs::read_dir(dir).map_err(|e| Error::ingestion(dir, e.to_string()))?;
    let mut entries = Vec::new();
    for entry in read {
        let path = entry
            .map_err(|e| Error::ingestion(dir, e.to_string()))?
            .path();
        if !file_name(&path).starts_with('.') && keep(&path) {
            entries.push(path);
        }
    }
    entries.sort_by(|a, b| natural_cmp(&file_name(a), &file_name(b)));
    Ok(entries)
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// First `n` samples of every class to train, the rest to test.
pub fn split_first_n(
    ds: &LabeledDataset,
    spec: SplitSpec,
) -> Result<(LabeledDataset, LabeledDataset)> {
    let n = spec.train_per_class();
    for (class, &count) in ds.per_class_counts().iter().enumerate() {
        if n >= count {
            return Err(Error::Split {
                class: ds.class_names()[class].clone(),
                count,
                train_per_class: n,
            });
        }
    }
    let mut seen = vec![0usize; ds.class_count()];
    let (train, test): (Vec<_>, Vec<_>) = ds.samples.iter().cloned().partition(|s| {
        seen[s.class_id] += 1;
        seen[s.class_id] <= n
    });
    Ok((
        LabeledDataset::new(train, ds.class_names.clone())?,
        LabeledDataset::new(test, ds.class_names.clone())?,
    ))
}

/// Seeded synthetic dataset: one random mean face per class plus Gaussian noise.
///
/// Class means are uniform in `[40, 215]`. Samples are clamped to `[0, 255]`
/// and rounded to whole intensities, so writing the dataset as PGM and
/// reading it back is lossless.
pub fn generate_synthetic(
    seed: u64,
    classes: usize,
    per_class: usize,
    width: usize,
    height: usize,
    noise_sd: f64,
) -> Result<LabeledDataset> {
    if classes < 2 || per_class < 2 {
        return Err(Error::InvalidParameter(format!(
            "synthetic data needs at least 2 classes and 2 samples per class, got {classes} and {per_class}"
        )));
    }
    if width == 0 || height == 0 {
        return Err(Error::InvalidParameter(format!(
            "synthetic image size must be positive, got {width}x{height}"
        )));
    }
    let bad_noise = || Error::InvalidParameter(format!("noise_sd must be >= 0, got {noise_sd}"));
    if noise_sd.is_nan() || noise_sd < 0.0 {
        return Err(bad_noise());
    }
    let noise = Normal::new(0.0, noise_sd).map_err(|_| bad_noise())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = width * height;

    let mut samples = Vec::with_capacity(classes * per_class);
    for class_id in 0..classes {
        let mean: Vec<f64> = (0..d).map(|_| rng.random_range(40.0..=215.0)).collect();
        for _ in 0..per_class {
            let pixels = mean
                .iter()
                .map(|&m| (m + noise.sample(&mut rng)).clamp(0.0, 255.0).round())
                .collect();
            samples.push(Sample {
                image: GrayImage::new(width, height, pixels)?,
                class_id,
            });
        }
    }
    let names = (1..=classes).map(|i| format!("s{i}")).collect();
    LabeledDataset::new(samples, names)
}

/// Writes an 8-bit binary PGM (P5); pixels are rounded to the nearest integer.
pub fn write_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    bytes.extend(img.pixels.iter().map(|p| p.round().clamp(0.0, 255.0) as u8));
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))
}

/// Writes `root/<class name>/<k>.pgm` with `k` counting from 1 within a class.
pub fn write_dataset(ds: &LabeledDataset, root: impl AsRef<Path>) -> Result<()> {
    let root = root.as_ref();
    let mut index = vec![0usize; ds.class_count()];
    for name in ds.class_names() {
        let dir = root.join(name);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    for sample in &ds.samples {
        index[sample.class_id] += 1;
        let path = root
            .join(&ds.class_names()[sample.class_id])
            .join(format!("{}.pgm", index[sample.class_id]));
        write_pgm(&sample.image, path)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn img(w: usize, h: usize, px: &[f64]) -> GrayImage {
        GrayImage::new(w, h, px.to_vec()).unwrap()
    }

    #[test]
    fn grayscale_weights() {
        assert_relative_eq!(to_grayscale(255.0, 255.0, 255.0), 255.0, epsilon = 1e-12);
        assert_eq!(to_grayscale(0.0, 0.0, 0.0), 0.0);
        assert_relative_eq!(to_grayscale(100.0, 200.0, 50.0), 153.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_images() {
        assert!(GrayImage::new(0, 1, vec![]).is_err());
        assert!(GrayImage::new(2, 2, vec![0.0; 3]).is_err());
        assert!(GrayImage::new(1, 1, vec![256.0]).is_err());
        assert!(GrayImage::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn pgm_binary_decode() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend([0u8, 255, 10, 20]);
        fs::write(&path, bytes).unwrap();
        assert_eq!(
            load_image(&path).unwrap(),
            img(2, 2, &[0.0, 255.0, 10.0, 20.0])
        );
    }

    #[test]
    fn pgm_ascii_decode() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        fs::write(&path, "P2\n# comment\n3 1\n255\n7 0 200\n").unwrap();
        assert_eq!(load_image(&path).unwrap(), img(3, 1, &[7.0, 0.0, 200.0]));
    }

    #[test]
    fn rgb_png_uses_luma() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("red.png");
        image::RgbImage::from_pixel(1, 1, image::Rgb([255, 0, 0]))
            .save(&path)
            .unwrap();
        let g = load_image(&path).unwrap();
        assert_eq!(g.dims(), (1, 1));
        assert_relative_eq!(g.pixels()[0], 76.245, epsilon = 1e-9);
    }

    #[test]
    fn load_errors_name_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("missing.pgm");
        let err = load_image(&missing).unwrap_err();
        assert!(err.to_string().contains("missing.pgm"), "{err}");

        let junk = dir.path().join("junk.txt");
        fs::write(&junk, "not an image at all").unwrap();
        assert!(matches!(load_image(&junk), Err(Error::Ingestion { .. })));

        let corrupt = dir.path().join("bad.pgm");
        fs::write(&corrupt, "P5\n2 x\n255\n").unwrap();
        let err = load_image(&corrupt).unwrap_err();
        assert!(err.to_string().contains("bad.pgm"), "{err}");
    }

    #[test]
    fn resize_examples() {
        let a = img(2, 1, &[0.0, 255.0]);
        assert_eq!(
            resize_bilinear(&a, 3, 1).unwrap().pixels(),
            &[0.0, 127.5, 255.0]
        );

        let b = img(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(resize_bilinear(&b, 3, 2).unwrap(), b);

        let c = GrayImage::filled(7, 5, 93.25).unwrap();
        let r = resize_bilinear(&c, 3, 11).unwrap();
        assert!(r.pixels().iter().all(|&p| p == 93.25));

        assert!(resize_bilinear(&b, 0, 2).is_err());
    }

    #[test]
    fn halving_averages_pixel_pairs() {
        let a = img(4, 2, &[0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0]);
        let r = resize_bilinear(&a, 2, 1).unwrap();
        assert_eq!(r.pixels(), &[25.0, 45.0]);
    }

    #[test]
    fn center_crop() {
        let a = img(4, 2, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let c = center_crop_to_aspect(&a, 1, 1).unwrap();
        assert_eq!(c.dims(), (2, 2));
        assert_eq!(c.pixels(), &[1.0, 2.0, 5.0, 6.0]);
        let wide = GrayImage::filled(640, 480, 1.0).unwrap();
        assert_eq!(
            center_crop_to_aspect(&wide, 30, 40).unwrap().dims(),
            (360, 480)
        );
    }

    #[test]
    fn natural_order() {
        let mut names: Vec<String> = (1..=10).rev().map(|i| format!("{i}.pgm")).collect();
        names.sort_by(|a, b| natural_cmp(a, b));
        let expected: Vec<String> = (1..=10).map(|i| format!("{i}.pgm")).collect();
        assert_eq!(names, expected);

        assert_eq!(natural_cmp("s2", "s10"), Ordering::Less);
        assert_eq!(natural_cmp("img_07", "img_7"), Ordering::Less);
        assert_eq!(natural_cmp("a", "a1"), Ordering::Less);
        assert_eq!(natural_cmp("b1", "a2"), Ordering::Greater);
    }

    #[test]
    fn directory_load_uses_numeric_file_order() {
        let dir = tempfile::tempdir().unwrap();
        for class in ["s10", "s2"] {
            let cdir = dir.path().join(class);
            fs::create_dir(&cdir).unwrap();
            for i in 1..=10 {
                let v = if class == "s2" {
                    i as f64
                } else {
                    100.0 + i as f64
                };
                write_pgm(
                    &GrayImage::filled(2, 3, v).unwrap(),
                    cdir.join(format!("{i}.pgm")),
                )
                .unwrap();
            }
        }
        fs::write(dir.path().join("README"), "ignored").unwrap();

        let ds = load_dataset(dir.path(), (2, 3)).unwrap();
        assert_eq!(ds.class_names(), &["s2".to_string(), "s10".to_string()]);
        assert_eq!(ds.per_class_counts(), vec![10, 10]);
        let firsts: Vec<f64> = ds.samples.iter().map(|s| s.image.pixels()[0]).collect();
        let expected: Vec<f64> = (1..=10)
            .map(f64::from)
            .chain((1..=10).map(|i| 100.0 + f64::from(i)))
            .collect();
        assert_eq!(firsts, expected);
    }

    #[test]
    fn directory_load_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_dataset(dir.path(), (2, 2)),
            Err(Error::Ingestion { .. })
        ));

        fs::create_dir(dir.path().join("a")).unwrap();
        let err = load_dataset(dir.path(), (2, 2)).unwrap_err();
        assert!(err.to_string().contains("no images"), "{err}");

        write_pgm(
            &GrayImage::filled(2, 2, 1.0).unwrap(),
            dir.path().join("a/1.pgm"),
        )
        .unwrap();
        fs::write(dir.path().join("a/2.pgm"), "garbage").unwrap();
        let err = load_dataset(dir.path(), (2, 2)).unwrap_err();
        assert!(err.to_string().contains("2.pgm"), "{err}");
    }

    #[test]
    fn split_counts_and_errors() {
        let ds = generate_synthetic(1, 4, 10, 3, 3, 5.0).unwrap();
        let (train, test) = split_first_n(&ds, SplitSpec::new(6).unwrap()).unwrap();
        assert_eq!((train.len(), test.len()), (24, 16));
        assert_eq!(train.class_count(), 4);

        let err = split_first_n(&ds, SplitSpec::new(10).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Split { ref class, .. } if class == "s1"));
        assert!(SplitSpec::new(0).is_err());
    }

    #[test]
    fn synthetic_properties() {
        let ds = generate_synthetic(5, 3, 4, 4, 5, 0.0).unwrap();
        for class in 0..3 {
            let members: Vec<_> = ds.samples.iter().filter(|s| s.class_id == class).collect();
            assert!(members.windows(2).all(|w| w[0].image == w[1].image));
        }
        assert_eq!(ds, generate_synthetic(5, 3, 4, 4, 5, 0.0).unwrap());
        assert_ne!(ds, generate_synthetic(6, 3, 4, 4, 5, 0.0).unwrap());
        assert!(generate_synthetic(5, 1, 4, 4, 5, 0.0).is_err());
        assert!(generate_synthetic(5, 2, 1, 4, 5, 0.0).is_err());
        assert!(generate_synthetic(5, 2, 2, 4, 5, -1.0).is_err());
    }

    #[test]
    fn dataset_tree_round_trip() {
        let ds = generate_synthetic(42, 3, 4, 5, 6, 12.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&ds, dir.path()).unwrap();
        assert_eq!(load_dataset(dir.path(), (5, 6)).unwrap(), ds);
    }

    proptest! {
        #[test]
        fn pgm_round_trip(w in 1usize..9, h in 1usize..9, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let px: Vec<f64> = (0..w * h).map(|_| f64::from(rng.random::<u8>())).collect();
            let g = img(w, h, &px);
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("x.pgm");
            write_pgm(&g, &path).unwrap();
            prop_assert_eq!(load_image(&path).unwrap(), g);
        }

        #[test]
        fn resize_preserves_range(
            w in 1usize..12, h in 1usize..12, ow in 1usize..20, oh in 1usize..20,
            px in proptest::collection::vec(0.0f64..=255.0, 144),
        ) {
            let g = img(w, h, &px[..w * h]);
            let (lo, hi) = g.pixels().iter().fold((f64::MAX, f64::MIN), |(a, b), &p| (a.min(p), b.max(p)));
            let r = resize_bilinear(&g, ow, oh).unwrap();
            prop_assert_eq!(r.dims(), (ow, oh));
            for &p in r.pixels() {
                prop_assert!(p >= lo - 1e-9 && p <= hi + 1e-9);
            }
        }

        #[test]
        fn split_partitions_dataset(n in 1usize..5, seed in 0u64..50) {
            let ds = generate_synthetic(seed, 3, 5, 2, 2, 30.0).unwrap();
            let (train, test) = split_first_n(&ds, SplitSpec::new(n).unwrap()).unwrap();
            prop_assert_eq!(train.len() + test.len(), ds.len());
            for class in 0..3 {
                let src: Vec<_> = ds.samples.iter().filter(|s| s.class_id == class).collect();
                let tr: Vec<_> = train.samples.iter().filter(|s| s.class_id == class).collect();
                let te: Vec<_> = test.samples.iter().filter(|s| s.class_id == class).collect();
                prop_assert_eq!(tr.len(), n);
                for (i, s) in tr.iter().chain(te.iter()).enumerate() {
                    prop_assert_eq!(*s, src[i]);
                }
            }
        }
    }
}
