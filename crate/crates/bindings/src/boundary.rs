//! Flat C-callable boundary over parameter packs.
//!
//! Every function returns a [`Status`] code (except constructors, which
//! return a handle and use 0 for failure). Handles are opaque positive
//! integers. Names are NUL-terminated UTF-8. Matrices are row-major `f64`
//! buffers copied in both directions. String and byte outputs use the
//! `(out, capacity, needed)` convention: `needed` always receives the full
//! length, and status [`BUFFER_TOO_SMALL`] means nothing was copied.

use std::cell::RefCell;
use std::collections::HashMap;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use mlkit::model_io::{Format, Model};
use mlkit::Matrix;

use crate::error::BindingError;
use crate::registry::registry;
use crate::value::{ParamPack, Value};

pub type Status = i32;

pub const OK: Status = 0;
pub const INVALID_ARGUMENT: Status = 1;
pub const INVALID_HANDLE: Status = 2;
pub const TYPE_MISMATCH: Status = 3;
pub const RUN_FAILED: Status = 4;
pub const BUFFER_TOO_SMALL: Status = 5;
pub const NOT_FOUND: Status = 6;

pub const BOUNDARY_VERSION: u32 = 1;

type Shared<T> = Mutex<HashMap<u64, Arc<Mutex<T>>>>;

struct Tables {
    packs: Shared<ParamPack>,
    models: Mutex<HashMap<u64, Arc<Model>>>,
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| Tables { packs: Mutex::new(HashMap::new()), models: Mutex::new(HashMap::new()) })
}

fn next_handle() -> u64 {
    static NEXT: AtomicU64 = AtomicU64::new(1);
    NEXT.fetch_add(1, Ordering::Relaxed)
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

/// Boundary failure: a status plus the message made retrievable for it.
struct Fail(Status, String);

type Outcome = Result<(), Fail>;

fn fail(status: Status, msg: impl Into<String>) -> Fail {
    Fail(status, msg.into())
}

/// Runs `body`, converting panics to [`RUN_FAILED`] and recording messages
/// in the thread's last error and, when `pack` is live, the pack's slot.
fn guard(pack: Option<u64>, body: impl FnOnce() -> Outcome) -> Status {
    let result = catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "internal panic".into());
        Err(fail(RUN_FAILED, format!("internal error: {msg}")))
    });
    match result {
        Ok(()) => OK,
        Err(Fail(status, msg)) => {
            if let Some(h) = pack {
                if let Ok(p) = pack_ref(h) {
                    lock(&p).set_error(Some(msg.clone()));
                }
            }
            LAST_ERROR.with(|e| *e.borrow_mut() = msg);
            status
        }
    }
}

fn lock<T>(m: &Mutex<T>) -> std::sync::MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

fn pack_ref(handle: u64) -> Result<Arc<Mutex<ParamPack>>, Fail> {
    lock(&tables().packs)
        .get(&handle)
        .cloned()
        .ok_or_else(|| fail(INVALID_HANDLE, format!("invalid pack handle {handle}")))
}

fn model_ref(handle: u64) -> Result<Arc<Model>, Fail> {
    lock(&tables().models)
        .get(&handle)
        .cloned()
        .ok_or_else(|| fail(INVALID_HANDLE, format!("invalid model handle {handle}")))
}

fn register_model(model: Arc<Model>) -> u64 {
    let h = next_handle();
    lock(&tables().models).insert(h, model);
    h
}

unsafe fn name_arg<'a>(name: *const c_char) -> Result<&'a str, Fail> {
    if name.is_null() {
        return Err(fail(INVALID_ARGUMENT, "name is null"));
    }
    CStr::from_ptr(name).to_str().map_err(|_| fail(INVALID_ARGUMENT, "name is not UTF-8"))
}

unsafe fn slice_arg<'a, T>(data: *const T, len: usize) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(fail(INVALID_ARGUMENT, "buffer is null"));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn out_arg<'a, T>(out: *mut T) -> Result<&'a mut T, Fail> {
    out.as_mut().ok_or_else(|| fail(INVALID_ARGUMENT, "output pointer is null"))
}

unsafe fn copy_out<T: Copy>(src: &[T], out: *mut T, capacity: usize) -> Outcome {
    if capacity < src.len() {
        return Err(fail(BUFFER_TOO_SMALL, format!("buffer holds {capacity}, need {}", src.len())));
    }
    if !src.is_empty() {
        if out.is_null() {
            return Err(fail(INVALID_ARGUMENT, "output buffer is null"));
        }
        std::ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    }
    Ok(())
}

unsafe fn copy_bytes_out(src: &[u8], out: *mut u8, capacity: usize, needed: *mut usize) -> Outcome {
    if let Some(n) = needed.as_mut() {
        *n = src.len();
    }
    copy_out(src, out, capacity)
}

unsafe fn set_value(handle: u64, name: *const c_char, make: impl FnOnce() -> Result<Value, Fail>) -> Status {
    guard(Some(handle), || {
        let pack = pack_ref(handle)?;
        let name = name_arg(name)?;
        let value = make()?;
        lock(&pack).set(name, value);
        Ok(())
    })
}

unsafe fn get_value(handle: u64, name: *const c_char, read: impl FnOnce(&Value) -> Outcome) -> Status {
    guard(Some(handle), || {
        let pack = pack_ref(handle)?;
        let name = name_arg(name)?;
        let pack = lock(&pack);
        let value = pack.get(name).ok_or_else(|| fail(NOT_FOUND, format!("no value named {name:?}")))?;
        read(value)
    })
}

fn mismatch(expected: &str, actual: &Value) -> Fail {
    fail(TYPE_MISMATCH, format!("expected {expected}, value is {}", actual.param_type()))
}

#[no_mangle]
pub extern "C" fn mlkit_boundary_version() -> u32 {
    BOUNDARY_VERSION
}

/// New empty pack; never returns 0.
#[no_mangle]
pub extern "C" fn mlkit_pack_create() -> u64 {
    let h = next_handle();
    lock(&tables().packs).insert(h, Arc::new(Mutex::new(ParamPack::new())));
    h
}

#[no_mangle]
pub extern "C" fn mlkit_pack_destroy(handle: u64) -> Status {
    guard(None, || {
        lock(&tables().packs)
            .remove(&handle)
            .map(|_| ())
            .ok_or_else(|| fail(INVALID_HANDLE, format!("invalid pack handle {handle}")))
    })
}

/// # Safety
/// `name` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mlkit_pack_set_double(handle: u64, name: *const c_char, value: f64) -> Status {
    set_value(handle, name, || Ok(Value::Double(value)))
}

/// # Safety
/// `name` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mlkit_pack_set_int(handle: u64, name: *const c_char, value: i64) -> Status {
    set_value(handle, name, || Ok(Value::Int(value)))
}

/// # Safety
/// `name` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mlkit_pack_set_flag(handle: u64, name: *const c_char, value: i32) -> Status {
    set_value(handle, name, || Ok(Value::Flag(value != 0)))
}

/// # Safety
/// `name` must be NUL-terminated; `data` must point to `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn mlkit_pack_set_string(
    handle: u64,
    name: *const c_char,
    data: *const u8,
    len: usize,
) -> Status {
    set_value(handle, name, || {
        let bytes = slice_arg(data, len)?;
        let s = std::str::from_utf8(bytes).map_err(|_| fail(INVALID_ARGUMENT, "string is not UTF-8"))?;
        Ok(Value::String(s.to_string()))
    })
}

/// Copies a `rows x cols` row-major buffer.
///
/// # Safety
/// `name` must be NUL-terminated; `data` must point to `rows * cols` doubles.
#[no_mangle]
pub unsafe extern "C" fn mlkit_pack_set_matrix(
    handle: u64,
    name: *const c_char,
    rows: usize,
    cols: usize,
    data: *const f64,
) -> Status {
    set_value(handle, name, || {
        let len = rows.checked_mul(cols).ok_or_else(|| fail(INVALID_ARGUMENT, "matrix size overflows"))?;
        let values = slice_arg(data, len)?.to_vec();
        let m = Matrix::from_vec(rows, cols, values).map_err(|e| fail(INVALID_ARGUMENT, e.to_string()))?;
        Ok(Value::Matrix(m))
    })
}

/// # Safety
/// `name` must be NUL-terminated; `data` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mlkit_pack_set_double_vector(
    handle: u64,
    name: *const c_char,
    len: usize,
    data: *const f64,
) -> Status {
    set_value(handle, name, || Ok(Value::DoubleVector(slice_arg(data, len)?.to_vec())))
}

/// Decodes a serialized model envelope into the pack.
///
/// # Safety
/// `name` must be NUL-terminated; `data` must point to `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn mlkit_pack_set_model_bytes(
    handle: u64,
    name: *const c_char,
    data: *const u8,
    len: usize,
) -> Status {
    set_value(handle, name, || {
        let model = Model::from_bytes(slice_arg(data, len)?).map_err(|e| fail(INVALID_ARGUMENT, e.to_string()))?;
        Ok(Value::Model(Arc::new(model)))
    })
}

/// Shares an already loaded model with the pack.
///
/// # Safety
/// `name` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mlkit_pack_set_model_handle(handle: u64, name: *const c_char, model: u64) -> Status {
    set_value(handle, name, || Ok(Value::Model(model_ref(model)?)))
}

/// Sets `out` to 1 when the pack holds a value named `name`, else 0.
///
/// # Safety
/// `name` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mlkit_pack_contains(handle: u64, name: *const c_char, out: *mut i32) -> Status {
    guard(Some(handle), || {
        let pack = pack_ref(handle)?;
        let name = name_arg(name)?;
        let present = lock(&pack).contains(name);
        *out_arg(out)? = i32::from(present);
        Ok(())
    })
}

/// # Safety
/// `name` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mlkit_pack_get_double(handle: u64, name: *const c_char, out: *mut f64) -> Status {
    get_value(handle, name, |v| match v {
        Value::Double(d) => {
            *out_arg(out)? = *d;
            Ok(())
        }
        other => Err(mismatch("double", other)),
    })
}

/// # Safety
/// `name` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mlkit_pack_get_int(handle: u64, name: *const c_char, out: *mut i64) -> Status {
    get_value(handle, name, |v| match v {
        Value::Int(i) => {
            *out_arg(out)? = *i;
            Ok(())
        }
        other => Err(mismatch("int", other)),
    })
}

/// # Safety
/// `name` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mlkit_pack_get_flag(handle: u64, name: *const c_char, out: *mut i32) -> Status {
    get_value(handle, name, |v| match v {
        Value::Flag(b) => {
            *out_arg(out)? = i32::from(*b);
            Ok(())
        }
        other => Err(mismatch("flag", other)),
    })
}

/// # Safety
/// `name` must be NUL-terminated; `out` must hold `capacity` bytes;
/// `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn mlkit_pack_get_string(
    handle: u64,
    name: *const c_char,
    out: *mut u8,
    capacity: usize,
    needed: *mut usize,
) -> Status {
    get_value(handle, name, |v| match v {
        Value::String(s) => copy_bytes_out(s.as_bytes(), out, capacity, needed),
        other => Err(mismatch("string", other)),
    })
}

/// # Safety
/// `name` must be NUL-terminated; `rows` and `cols` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mlkit_pack_get_matrix_dims(
    handle: u64,
    name: *const c_char,
    rows: *mut usize,
    cols: *mut usize,
) -> Status {
    get_value(handle, name, |v| match v {
        Value::Matrix(m) => {
            *out_arg(rows)? = m.rows();
            *out_arg(cols)? = m.cols();
            Ok(())
        }
        other => Err(mismatch("matrix", other)),
    })
}

/// # Safety
/// `name` must be NUL-terminated; `out` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn mlkit_pack_copy_matrix(
    handle: u64,
    name: *const c_char,
    out: *mut f64,
    capacity: usize,
) -> Status {
    get_value(handle, name, |v| match v {
        Value::Matrix(m) => copy_out(m.as_slice(), out, capacity),
        other => Err(mismatch("matrix", other)),
    })
}

/// # Safety
/// `name` must be NUL-terminated; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mlkit_pack_get_double_vector_len(handle: u64, name: *const c_char, len: *mut usize) -> Status {
    get_value(handle, name, |v| match v {
        Value::DoubleVector(d) => {
            *out_arg(len)? = d.len();
            Ok(())
        }
        other => Err(mismatch("double_vector", other)),
    })
}

/// # Safety
/// `name` must be NUL-terminated; `out` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn mlkit_pack_copy_double_vector(
    handle: u64,
    name: *const c_char,
    out: *mut f64,
    capacity: usize,
) -> Status {
    get_value(handle, name, |v| match v {
        Value::DoubleVector(d) => copy_out(d, out, capacity),
        other => Err(mismatch("double_vector", other)),
    })
}

/// Issues a model handle sharing the pack's model value.
///
/// # Safety
/// `name` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mlkit_pack_get_model_handle(handle: u64, name: *const c_char, out: *mut u64) -> Status {
    get_value(handle, name, |v| match v {
        Value::Model(m) => {
            *out_arg(out)? = register_model(Arc::clone(m));
            Ok(())
        }
        other => Err(mismatch("model", other)),
    })
}

/// Runs a registered method on the pack's values; outputs are added to the
/// pack. Type mismatches report [`TYPE_MISMATCH`], every other failure
/// [`RUN_FAILED`].
///
/// # Safety
/// `method` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mlkit_pack_run(handle: u64, method: *const c_char) -> Status {
    guard(Some(handle), || {
        let pack = pack_ref(handle)?;
        let method = name_arg(method)?;
        let mut pack = lock(&pack);
        registry().run_in_place(method, &mut pack).map_err(|e| {
            let status = if matches!(e, BindingError::TypeMismatch { .. }) { TYPE_MISMATCH } else { RUN_FAILED };
            fail(status, e.to_string())
        })
    })
}

/// Message of the pack's most recent failure; empty when none.
///
/// # Safety
/// `out` must hold `capacity` bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn mlkit_pack_last_error(
    handle: u64,
    out: *mut u8,
    capacity: usize,
    needed: *mut usize,
) -> Status {
    // Not routed through `guard`, which would overwrite the message.
    let Ok(pack) = pack_ref(handle) else { return INVALID_HANDLE };
    let msg = lock(&pack).error().unwrap_or_default().to_string();
    match copy_bytes_out(msg.as_bytes(), out, capacity, needed) {
        Ok(()) => OK,
        Err(Fail(status, _)) => status,
    }
}

/// Message of this thread's most recent failure from any boundary call.
///
/// # Safety
/// `out` must hold `capacity` bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn mlkit_last_error(out: *mut u8, capacity: usize, needed: *mut usize) -> Status {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    match copy_bytes_out(msg.as_bytes(), out, capacity, needed) {
        Ok(()) => OK,
        Err(Fail(status, _)) => status,
    }
}

/// Decodes envelope bytes into a new model handle.
///
/// # Safety
/// `data` must point to `len` bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mlkit_model_load(data: *const u8, len: usize, out: *mut u64) -> Status {
    guard(None, || {
        let model = Model::from_bytes(slice_arg(data, len)?).map_err(|e| fail(INVALID_ARGUMENT, e.to_string()))?;
        *out_arg(out)? = register_model(Arc::new(model));
        Ok(())
    })
}

fn format_arg(format: u8) -> Result<Format, Fail> {
    Format::from_byte(format).ok_or_else(|| fail(INVALID_ARGUMENT, format!("unknown format byte {format}")))
}

/// Serializes the model (`format` 1 binary, 2 text) into `out`.
///
/// # Safety
/// `out` must hold `capacity` bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn mlkit_model_serialize(
    model: u64,
    format: u8,
    out: *mut u8,
    capacity: usize,
    needed: *mut usize,
) -> Status {
    guard(None, || {
        let bytes = model_ref(model)?.to_bytes(format_arg(format)?);
        copy_bytes_out(&bytes, out, capacity, needed)
    })
}

/// # Safety
/// `out` must hold `capacity` bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn mlkit_model_type_tag(model: u64, out: *mut u8, capacity: usize, needed: *mut usize) -> Status {
    guard(None, || copy_bytes_out(model_ref(model)?.type_tag().as_bytes(), out, capacity, needed))
}

#[no_mangle]
pub extern "C" fn mlkit_model_destroy(model: u64) -> Status {
    guard(None, || {
        lock(&tables().models)
            .remove(&model)
            .map(|_| ())
            .ok_or_else(|| fail(INVALID_HANDLE, format!("invalid model handle {model}")))
    })
}
