//! Axis-aligned boxes, annotations and detections.
//!
//! Boxes are stored as `(x_min, y_min, width, height)` in real-valued pixel
//! coordinates, the same layout the JSON formats use for `bbox`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CategoryId = u32;
pub type InstanceId = u64;

/// Area of a 32x32 box; anything strictly below is small.
pub const SMALL_AREA_MAX: f64 = 32.0 * 32.0;
/// Area of a 96x96 box; anything strictly above is large.
pub const MEDIUM_AREA_MAX: f64 = 96.0 * 96.0;

/// An axis-aligned box with positive extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    x: f64,
    y: f64,
    width: f64,
    height: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, width: f64, height: f64) -> Result<Self> {
        let ok = [x, y, width, height].iter().all(|v| v.is_finite()) && width > 0.0 && height > 0.0;
        if !ok {
            return Err(Error::InvalidBox {
                x,
                y,
                width,
                height,
            });
        }
        Ok(BBox {
            x,
            y,
            width,
            height,
        })
    }

    /// Builds a box from corner coordinates `(left, top, right, bottom)`.
    pub fn from_corners(left: f64, top: f64, right: f64, bottom: f64) -> Result<Self> {
        BBox::new(left, top, right - left, bottom - top)
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn x_max(&self) -> f64 {
        self.x + self.width
    }

    pub fn y_max(&self) -> f64 {
        self.y + self.height
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + 0.5 * self.width, self.y + 0.5 * self.height)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Result<Self> {
        BBox::new(self.x + dx, self.y + dy, self.width, self.height)
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        BBox::new(self.x * s, self.y * s, self.width * s, self.height * s)
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let iw = self.x_max().min(other.x_max()) - self.x.max(other.x);
        let ih = self.y_max().min(other.y_max()) - self.y.max(other.y);
        if iw <= 0.0 || ih <= 0.0 {
            0.0
        } else {
            iw * ih
        }
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        iou(self, other)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.x, self.y, self.width, self.height]
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = Error;

    fn try_from(v: [f64; 4]) -> Result<Self> {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        b.as_array()
    }
}

/// Intersection over union of two boxes.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Intersects `b` with the `[0, image_w] x [0, image_h]` frame.
pub fn clip_box(b: &BBox, image_w: f64, image_h: f64) -> Result<BBox> {
    if !(image_w > 0.0 && image_h > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "image dimensions must be positive, got {image_w}x{image_h}"
        )));
    }
    let left = b.x().max(0.0);
    let top = b.y().max(0.0);
    let right = b.x_max().min(image_w);
    let bottom = b.y_max().min(image_h);
    if right <= left || bottom <= top {
        return Err(Error::EmptyAfterClip {
            width: image_w,
            height: image_h,
        });
    }
    BBox::from_corners(left, top, right, bottom)
}

/// COCO-style size class, ordered `Small < Medium < Large`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeBucket {
    Small,
    Medium,
    Large,
}

impl SizeBucket {
    pub const ALL: [SizeBucket; 3] = [SizeBucket::Small, SizeBucket::Medium, SizeBucket::Large];

    pub fn of_area(area: f64) -> SizeBucket {
        if area < SMALL_AREA_MAX {
            SizeBucket::Small
        } else if area <= MEDIUM_AREA_MAX {
            SizeBucket::Medium
        } else {
            SizeBucket::Large
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SizeBucket::Small => "small",
            SizeBucket::Medium => "medium",
            SizeBucket::Large => "large",
        }
    }
}

/// Both 32² and 96² fall into the medium bucket.
pub fn classify_size(b: &BBox) -> SizeBucket {
    SizeBucket::of_area(b.area())
}

/// A ground-truth object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub image_id: String,
    pub bbox: BBox,
    pub category_id: CategoryId,
    pub instance_id: InstanceId,
}

/// A scored, labeled prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDetection")]
pub struct Detection {
    pub image_id: String,
    pub bbox: BBox,
    pub category_id: CategoryId,
    pub score: f64,
}

#[derive(Deserialize)]
struct RawDetection {
    image_id: String,
    bbox: BBox,
    category_id: CategoryId,
    score: f64,
}

impl TryFrom<RawDetection> for Detection {
    type Error = Error;

    fn try_from(r: RawDetection) -> Result<Self> {
        Detection::new(r.image_id, r.bbox, r.category_id, r.score)
    }
}

impl Detection {
    pub fn new(image_id: impl Into<String>, bbox: BBox, category_id: CategoryId, score: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::InvalidConfig(format!("detection score {score} is outside [0, 1]")));
        }
        Ok(Detection {
            image_id: image_id.into(),
            bbox,
            category_id,
            score,
        })
    }
}
