//! Python bindings. Images and maps cross the boundary as flat row-major
//! float lists plus their dimensions; reports come back as plain dicts.

use std::collections::BTreeMap;
use std::path::PathBuf;

use owkit_core::dataset::{
    make_openset_view, make_task_view, merge_classes, select_exemplar_replay, select_proposal_holdout,
    ClassMergeMap, DatasetManifest, Preset, Split,
};
use owkit_core::metrics::{self, CocoParams};
use owkit_core::relabel::read_proposals_jsonl;
use owkit_core::{
    io, Annotation, BBox, Detection, FusionWeights, ImageBuffer, Plane, ProposalSet, ProposalSource, RelabelConfig,
    SaliencyMap, SpectralConfig,
};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::Serialize;
use serde_json::Value;

create_exception!(owkit, OwkitError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    OwkitError::new_err(e.to_string())
}

type Tuple4 = (f64, f64, f64, f64);
type DetTuple = (String, Tuple4, u32, f64);
type AnnTuple = (String, Tuple4, u32, u64);

fn bbox(t: Tuple4) -> PyResult<BBox> {
    BBox::new(t.0, t.1, t.2, t.3).map_err(err)
}

fn tuple(b: &BBox) -> Tuple4 {
    (b.x(), b.y(), b.width(), b.height())
}

fn detections(list: Vec<DetTuple>) -> PyResult<Vec<Detection>> {
    list.into_iter()
        .map(|(id, b, c, s)| Detection::new(id, bbox(b)?, c, s).map_err(err))
        .collect()
}

fn annotations(list: Vec<AnnTuple>) -> PyResult<Vec<Annotation>> {
    list.into_iter()
        .map(|(image_id, b, category_id, instance_id)| {
            Ok(Annotation {
                image_id,
                bbox: bbox(b)?,
                category_id,
                instance_id,
            })
        })
        .collect()
}

fn ann_tuple(a: &Annotation) -> AnnTuple {
    (a.image_id.clone(), tuple(&a.bbox), a.category_id, a.instance_id)
}

fn split(s: &str) -> PyResult<Split> {
    match s {
        "train" => Ok(Split::Train),
        "val" => Ok(Split::Val),
        other => Err(err(format!("split must be `train` or `val`, got `{other}`"))),
    }
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(a) => PyList::new(py, a.iter().map(|x| to_py(py, x)).collect::<PyResult<Vec<_>>>()?)?.into_any(),
        Value::Object(o) => {
            let d = PyDict::new(py);
            for (k, x) in o {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn report<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &serde_json::to_value(value).map_err(err)?)
}

fn image(data: Vec<f64>, width: usize, height: usize, channels: usize) -> PyResult<ImageBuffer> {
    ImageBuffer::new(width, height, channels, data).map_err(err)
}

fn spectral_config(json: Option<&str>) -> PyResult<SpectralConfig> {
    let cfg: SpectralConfig = match json {
        Some(s) => serde_json::from_str(s).map_err(err)?,
        None => SpectralConfig::default(),
    };
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

/// Axis-aligned box `(x, y, width, height)` in pixels.
#[pyclass(name = "BBox", frozen)]
struct PyBBox(BBox);

#[pymethods]
impl PyBBox {
    #[new]
    fn new(x: f64, y: f64, width: f64, height: f64) -> PyResult<Self> {
        BBox::new(x, y, width, height).map(PyBBox).map_err(err)
    }

    #[getter]
    fn x(&self) -> f64 {
        self.0.x()
    }

    #[getter]
    fn y(&self) -> f64 {
        self.0.y()
    }

    #[getter]
    fn width(&self) -> f64 {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> f64 {
        self.0.height()
    }

    #[getter]
    fn area(&self) -> f64 {
        self.0.area()
    }

    fn iou(&self, other: &PyBBox) -> f64 {
        self.0.iou(&other.0)
    }

    fn clip(&self, image_width: f64, image_height: f64) -> PyResult<Self> {
        owkit_core::clip_box(&self.0, image_width, image_height).map(PyBBox).map_err(err)
    }

    fn as_tuple(&self) -> Tuple4 {
        tuple(&self.0)
    }

    fn __eq__(&self, other: &PyBBox) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("BBox({}, {}, {}, {})", self.0.x(), self.0.y(), self.0.width(), self.0.height())
    }
}

/// IoU of two `(x, y, w, h)` tuples.
#[pyfunction]
fn iou(a: Tuple4, b: Tuple4) -> PyResult<f64> {
    Ok(owkit_core::iou(&bbox(a)?, &bbox(b)?))
}

/// Full-frame saliency of a flat image. Returns the flat map.
#[pyfunction]
#[pyo3(signature = (data, width, height, channels = 1, config = None))]
fn spectral_residual(
    py: Python<'_>,
    data: Vec<f64>,
    width: usize,
    height: usize,
    channels: usize,
    config: Option<&str>,
) -> PyResult<Vec<f64>> {
    let img = image(data, width, height, channels)?;
    let cfg = spectral_config(config)?;
    let map = py.detach(|| owkit_core::spectral_residual(&img, &cfg)).map_err(err)?;
    Ok(map.into_plane().into_data())
}

/// Saliency restricted to `regions`, a list of `(x, y, w, h)`.
#[pyfunction]
#[pyo3(signature = (data, width, height, regions, channels = 1, config = None))]
fn region_saliency(
    py: Python<'_>,
    data: Vec<f64>,
    width: usize,
    height: usize,
    regions: Vec<Tuple4>,
    channels: usize,
    config: Option<&str>,
) -> PyResult<Vec<f64>> {
    let img = image(data, width, height, channels)?;
    let cfg = spectral_config(config)?;
    let boxes = regions.into_iter().map(bbox).collect::<PyResult<Vec<_>>>()?;
    let map = py.detach(|| owkit_core::region_saliency(&img, &boxes, &cfg)).map_err(err)?;
    Ok(map.into_plane().into_data())
}

/// Fuses an image with a saliency map; returns the flat RGB result.
#[pyfunction]
#[pyo3(signature = (data, width, height, saliency, channels = 3, weights = None))]
fn merge(
    data: Vec<f64>,
    width: usize,
    height: usize,
    saliency: Vec<f64>,
    channels: usize,
    weights: Option<&str>,
) -> PyResult<Vec<f64>> {
    let img = image(data, width, height, channels)?;
    let s = SaliencyMap::new(Plane::new(width, height, saliency).map_err(err)?).map_err(err)?;
    let w = match weights {
        Some(j) => FusionWeights::from_json_str(j).map_err(err)?,
        None => FusionWeights::default(),
    };
    let out = owkit_core::merge(&img, &s, &w).map_err(err)?;
    Ok(out.data().to_vec())
}

/// Reads an image file as `(width, height, channels, data)`.
#[pyfunction]
fn read_image(path: PathBuf) -> PyResult<(usize, usize, usize, Vec<f64>)> {
    let img = io::read_image(path).map_err(err)?;
    Ok((img.width(), img.height(), img.channels(), img.data().to_vec()))
}

/// Reads a `.salf` or PNG saliency map as `(width, height, data)`.
#[pyfunction]
fn read_saliency(path: PathBuf) -> PyResult<(usize, usize, Vec<f64>)> {
    let m = io::read_saliency(path).map_err(err)?;
    Ok((m.width(), m.height(), m.into_plane().into_data()))
}

/// Relabels one image. `truth` holds `(image_id, box, category_id,
/// instance_id)` tuples; returns the extended list and the counts.
#[pyfunction]
#[pyo3(signature = (image_id, proposals, truth, unknown_category, alpha = 0.3, dedup_iou = 0.9))]
fn relabel_image<'py>(
    py: Python<'py>,
    image_id: String,
    proposals: Vec<Tuple4>,
    truth: Vec<AnnTuple>,
    unknown_category: u32,
    alpha: f64,
    dedup_iou: f64,
) -> PyResult<(Vec<AnnTuple>, Bound<'py, PyAny>)> {
    let boxes = proposals.into_iter().map(bbox).collect::<PyResult<Vec<_>>>()?;
    let set = ProposalSet::new(image_id, boxes, ProposalSource::ExternalDetector);
    let cfg = RelabelConfig { alpha, dedup_iou };
    let out = owkit_core::relabel_image(&set, &annotations(truth)?, &cfg, unknown_category).map_err(err)?;
    Ok((out.annotations.iter().map(ann_tuple).collect(), report(py, &out.counts)?))
}

/// COCO-style AP/AR suite. `detections` holds `(image_id, box,
/// category_id, score)` tuples.
#[pyfunction]
#[pyo3(signature = (detections, truth, iou_thresholds = None, max_detections = 100, class_agnostic = false))]
fn coco_evaluate<'py>(
    py: Python<'py>,
    detections: Vec<DetTuple>,
    truth: PyRef<'py, PyManifest>,
    iou_thresholds: Option<Vec<f64>>,
    max_detections: usize,
    class_agnostic: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let params = CocoParams {
        iou_thresholds: iou_thresholds.unwrap_or_else(metrics::default_thresholds),
        max_detections,
        class_agnostic,
    };
    let dets = self::detections(detections)?;
    let anns = truth.0.annotations.clone();
    let r = py.detach(|| metrics::coco_suite(&dets, &anns, &params));
    report(py, &r)
}

#[pyfunction]
#[pyo3(signature = (detections, known, unknown, score_threshold = metrics::DEFAULT_SCORE_THRESHOLD))]
fn wilderness_impact<'py>(
    py: Python<'py>,
    detections: Vec<DetTuple>,
    known: Vec<AnnTuple>,
    unknown: Vec<AnnTuple>,
    score_threshold: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let r = metrics::wilderness_impact(
        &self::detections(detections)?,
        &annotations(known)?,
        &annotations(unknown)?,
        score_threshold,
    )
    .map_err(err)?;
    report(py, &r)
}

#[pyfunction]
fn wilderness_from_precisions(p_known: f64, p_mixed: f64) -> PyResult<f64> {
    metrics::wilderness_from_precisions(p_known, p_mixed).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (detections, unknown, iou_threshold = metrics::WI_IOU, score_threshold = metrics::DEFAULT_SCORE_THRESHOLD))]
fn absolute_open_set_error<'py>(
    py: Python<'py>,
    detections: Vec<DetTuple>,
    unknown: Vec<AnnTuple>,
    iou_threshold: f64,
    score_threshold: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let r = metrics::absolute_open_set_error(
        &self::detections(detections)?,
        &annotations(unknown)?,
        iou_threshold,
        score_threshold,
    );
    report(py, &r)
}

/// A dataset manifest: categories, images and box annotations.
#[pyclass(name = "Manifest", skip_from_py_object)]
#[derive(Clone)]
struct PyManifest(DatasetManifest);

#[pymethods]
impl PyManifest {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        DatasetManifest::load(path).map(PyManifest).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        DatasetManifest::from_json_str(text).map(PyManifest).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json_string()
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save(path).map_err(err)
    }

    #[getter]
    fn split(&self) -> &'static str {
        self.0.split.as_str()
    }

    #[getter]
    fn categories(&self) -> BTreeMap<u32, String> {
        self.0.categories.iter().map(|c| (c.id, c.name.clone())).collect()
    }

    #[getter]
    fn image_ids(&self) -> Vec<String> {
        self.0.images.iter().map(|i| i.id.clone()).collect()
    }

    #[getter]
    fn annotations(&self) -> Vec<AnnTuple> {
        self.0.annotations.iter().map(ann_tuple).collect()
    }

    fn instance_counts(&self) -> BTreeMap<String, usize> {
        self.0.instance_counts()
    }

    fn category_id(&self, name: &str) -> Option<u32> {
        self.0.category_id(name)
    }

    /// Renames classes through `mapping` and removes the `drop` classes.
    #[pyo3(signature = (mapping, drop = Vec::new()))]
    fn merge_classes(&self, mapping: BTreeMap<String, String>, drop: Vec<String>) -> PyResult<Self> {
        let m = ClassMergeMap::new(
            mapping.iter().map(|(a, b)| (a.as_str(), b.as_str())),
            drop.iter().map(String::as_str),
        );
        merge_classes(&self.0, &m).map(PyManifest).map_err(err)
    }

    fn openset_view(&self, known: Vec<String>, split: &str) -> PyResult<Self> {
        let known = known.into_iter().collect();
        make_openset_view(&self.0, &known, self::split(split)?).map(PyManifest).map_err(err)
    }

    /// View of task `task` under a built-in preset schedule.
    fn task_view(&self, preset: &str, task: u32, split: &str) -> PyResult<Self> {
        let p = Preset::named(preset).map_err(err)?;
        make_task_view(&self.0, &p.schedule, task, self::split(split)?).map(PyManifest).map_err(err)
    }

    /// Adds unknown annotations from a JSON-lines proposals file.
    #[pyo3(signature = (proposals, alpha = 0.3, dedup_iou = 0.9))]
    fn relabel<'py>(
        &self,
        py: Python<'py>,
        proposals: PathBuf,
        alpha: f64,
        dedup_iou: f64,
    ) -> PyResult<(Self, Bound<'py, PyAny>)> {
        let props = read_proposals_jsonl(proposals, ProposalSource::ExternalDetector).map_err(err)?;
        let cfg = RelabelConfig { alpha, dedup_iou };
        let (m, counts) = owkit_core::relabel_dataset(&self.0, &props, &cfg).map_err(err)?;
        Ok((PyManifest(m), report(py, &counts)?))
    }

    /// Returns the holdout selection and the remaining manifest.
    fn holdout<'py>(&self, py: Python<'py>, n: usize, seed: u64) -> PyResult<(Bound<'py, PyAny>, Self)> {
        let (sel, rest) = select_proposal_holdout(&self.0, n, seed).map_err(err)?;
        Ok((report(py, &sel)?, PyManifest(rest)))
    }

    fn replay<'py>(&self, py: Python<'py>, known: Vec<String>, min_instances: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let known = known.into_iter().collect();
        report(py, &select_exemplar_replay(&self.0, &known, min_instances, seed).map_err(err)?)
    }

    fn __len__(&self) -> usize {
        self.0.images.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Manifest(split={}, images={}, annotations={}, categories={})",
            self.0.split.as_str(),
            self.0.images.len(),
            self.0.annotations.len(),
            self.0.categories.len()
        )
    }
}

#[pymodule]
pub fn owkit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("OwkitError", m.py().get_type::<OwkitError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyBBox>()?;
    m.add_class::<PyManifest>()?;
    m.add_function(wrap_pyfunction!(iou, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_residual, m)?)?;
    m.add_function(wrap_pyfunction!(region_saliency, m)?)?;
    m.add_function(wrap_pyfunction!(merge, m)?)?;
    m.add_function(wrap_pyfunction!(read_image, m)?)?;
    m.add_function(wrap_pyfunction!(read_saliency, m)?)?;
    m.add_function(wrap_pyfunction!(relabel_image, m)?)?;
    m.add_function(wrap_pyfunction!(coco_evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(wilderness_impact, m)?)?;
    m.add_function(wrap_pyfunction!(wilderness_from_precisions, m)?)?;
    m.add_function(wrap_pyfunction!(absolute_open_set_error, m)?)?;
    Ok(())
}
