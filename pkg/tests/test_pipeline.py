import hashlib
from dataclasses import replace
from fractions import Fraction

import httpx
import pytest

from posterforge.backends import Backends, EndpointConfig, Mock, Remote
from posterforge.backends.mock import mock_background
from posterforge.blueprint import StyleId, UserRequirement
from posterforge.pipeline import (
    BackgroundOverrides,
    FileJobStore,
    MemoryJobStore,
    Pipeline,
    SingleDirStore,
    StageFailed,
    StaleVersion,
    StateTerminal,
    WrongState,
    scale_slug,
    transition_legal,
)
from posterforge.typography import Font, SetText, TextRun, extract_text, parse_poster_html

REQ = UserRequirement("城市市集海报")


def mock_pipeline(tmp_path, seed=42) -> Pipeline:
    return Pipeline(FileJobStore(tmp_path / "jobs"), Backends.mock(seed), seed=seed)


def test_create_job_shape(tmp_path):
    pipe = mock_pipeline(tmp_path)
    job = pipe.create_job(REQ)
    assert job.state.name == "Created" and job.version == 1
    assert job.blueprint is None and job.poster is None and job.renders == ()


def test_seeded_pipelines_draw_equal_background_seeds(tmp_path):
    a = mock_pipeline(tmp_path / "a", seed=42).create_job(REQ)
    b = mock_pipeline(tmp_path / "b", seed=42).create_job(REQ)
    assert a.seeds.background_seed == b.seeds.background_seed


def test_advance_walks_all_stages(tmp_path):
    pipe = mock_pipeline(tmp_path)
    job = pipe.create_job(REQ)
    states = [job.state.name]
    for _ in range(4):
        job = pipe.advance(job)
        states.append(job.state.name)
    assert states == ["Created", "BlueprintReady", "BackgroundReady", "LayoutReady", "Rendered"]
    assert extract_text(job.poster) == job.blueprint.textual.strings()
    assert [str(r.scale) for r in job.renders] == ["1"]
    assert {s for s, _ in job.timings} == {"blueprint", "background", "layout", "render"}


def test_advance_terminal(tmp_path):
    pipe = mock_pipeline(tmp_path)
    job = pipe.run_to_rendered(pipe.create_job(REQ))
    with pytest.raises(StateTerminal):
        pipe.advance(job)


def test_backend_failure_persists_failed_state(tmp_path):
    def handler(request):
        raise httpx.ConnectTimeout("no models here")

    broken = Remote(EndpointConfig(base_url="http://models.test", max_retries=0, timeout=0.1),
                    transport=httpx.MockTransport(handler))
    suite = Backends(blueprint=Mock(1), layout=Mock(1), background_default=broken)
    pipe = Pipeline(FileJobStore(tmp_path / "jobs"), suite, seed=1)
    job = pipe.advance(pipe.create_job(REQ))
    with pytest.raises(StageFailed) as err:
        pipe.advance(job)
    assert err.value.stage == "background"
    stored = pipe.store.load(job.id)
    assert stored.state.name == "Failed" and stored.state.stage == "background"
    assert "timeout" in stored.state.reason
    with pytest.raises(StateTerminal):
        pipe.advance(stored)


def test_persistence_roundtrip_each_stage(tmp_path):
    pipe = mock_pipeline(tmp_path)
    job = pipe.create_job(REQ)
    for _ in range(4):
        job = pipe.advance(job)
        assert pipe.store.load(job.id) == job


def test_edit_resets_renders_and_replay_reproduces(tmp_path):
    pipe = mock_pipeline(tmp_path)
    job = pipe.run_to_rendered(pipe.create_job(REQ))
    pristine = job.poster
    render_path = tmp_path / "jobs" / job.id / job.renders[0].path
    assert render_path.exists()

    first_id = job.poster.nodes[0].id
    e1 = SetText(first_id, (TextRun("替换标题", Font(size=Fraction(30))),))
    job = pipe.edit_layout(job, e1)
    assert job.state.name == "LayoutReady" and job.renders == ()
    assert not render_path.exists()

    e2 = SetText(first_id, (TextRun("再次替换", Font(size=Fraction(28))),))
    job = pipe.edit_layout(job, e2)

    from posterforge.typography import apply_edit
    replayed = pristine
    for entry in job.edit_history:
        replayed = apply_edit(replayed, entry.edit)
    assert replayed == job.poster


def test_edit_wrong_state(tmp_path):
    pipe = mock_pipeline(tmp_path)
    job = pipe.advance(pipe.create_job(REQ))  # BlueprintReady
    with pytest.raises(WrongState):
        pipe.edit_layout(job, SetText("title", (TextRun("x", Font(size=Fraction(10))),)))


def test_regenerate_background_rebinds_only(tmp_path):
    pipe = mock_pipeline(tmp_path)
    job = pipe.run_to_rendered(pipe.create_job(REQ))
    before_text = extract_text(job.poster)
    before_rects = [n.rect for n in job.poster.nodes]
    new = pipe.regenerate_background(job, BackgroundOverrides(seed=777))
    assert new.background.content_hash != job.background.content_hash
    assert extract_text(new.poster) == before_text
    assert [n.rect for n in new.poster.nodes] == before_rects
    assert new.poster.background_image == new.background.id
    assert new.state.name == "LayoutReady" and new.renders == ()
    assert new.seeds.background_seed == 777


def test_regenerate_style_override_changes_palette(tmp_path):
    pipe = mock_pipeline(tmp_path)
    job = pipe.run_to_rendered(pipe.create_job(REQ))
    other_style = next(s for s in StyleId if s != job.blueprint.background.style)
    new = pipe.regenerate_background(job, BackgroundOverrides(style=other_style))
    assert new.background.content_hash != job.background.content_hash
    # The stored blueprint records the original design, not runtime overrides.
    assert new.blueprint == job.blueprint


def test_regenerate_failure_leaves_job_unchanged(tmp_path):
    def handler(request):
        return httpx.Response(400, text="nope")

    broken = Remote(EndpointConfig(base_url="http://models.test", max_retries=0),
                    transport=httpx.MockTransport(handler))
    pipe = mock_pipeline(tmp_path)
    job = pipe.run_to_rendered(pipe.create_job(REQ))
    suite = Backends(blueprint=Mock(1), layout=Mock(1), background_default=broken)
    broken_pipe = Pipeline(pipe.store, suite, seed=1)
    from posterforge.backends import BackendRejected
    with pytest.raises(BackendRejected):
        broken_pipe.regenerate_background(job, BackgroundOverrides(seed=5))
    assert pipe.store.load(job.id) == job


def test_render_scales_and_dedupes(tmp_path):
    pipe = mock_pipeline(tmp_path)
    job = pipe.run_to_rendered(pipe.create_job(REQ))
    one = next(r for r in job.renders if r.scale == 1)
    job = pipe.render(job, Fraction(2))
    two = next(r for r in job.renders if r.scale == 2)
    png1 = pipe.store.read_blob(job.id, one.path)
    png2 = pipe.store.read_blob(job.id, two.path)
    from posterforge.typography.png import png_dimensions
    w1, h1 = png_dimensions(png1)
    w2, h2 = png_dimensions(png2)
    assert (w2, h2) == (2 * w1, 2 * h1)

    again = pipe.render(job, Fraction(2))
    assert [r for r in again.renders if r.scale == 2] == [two]
    assert again.renders.count(two) == 1


def test_render_out_of_range_leaves_job(tmp_path):
    from posterforge.typography import ScaleOutOfRange

    pipe = mock_pipeline(tmp_path)
    job = pipe.run_to_rendered(pipe.create_job(REQ))
    with pytest.raises(ScaleOutOfRange):
        pipe.render(job, Fraction(1000))
    assert pipe.store.load(job.id) == job


def test_background_upload_override_before_stage_two(tmp_path):
    pipe = mock_pipeline(tmp_path)
    job = pipe.advance(pipe.create_job(REQ))  # BlueprintReady
    res = job.blueprint.params.resolution
    upload = mock_background(job.blueprint.background, res.width, res.height, 9, 9)
    job = pipe.attach_background_override(job, upload.data)
    assert job.background_override is not None
    job = pipe.advance(job)  # background stage adopts the upload
    assert job.state.name == "BackgroundReady"
    assert job.background.content_hash == upload.content_hash
    assert job.background_override is None


def test_background_upload_mismatch_rejected(tmp_path):
    from posterforge.backends import ResolutionMismatch

    pipe = mock_pipeline(tmp_path)
    job = pipe.advance(pipe.create_job(REQ))
    wrong = mock_background(job.blueprint.background, 64, 64, 9, 9)
    with pytest.raises(ResolutionMismatch):
        pipe.attach_background_override(job, wrong.data)


def test_stale_version_rejected(tmp_path):
    pipe = mock_pipeline(tmp_path)
    job = pipe.create_job(REQ)
    pipe.advance(job)
    with pytest.raises(StaleVersion):
        pipe.advance(job)  # same pre-advance value: stored version moved on


def test_memory_store_matches_file_store(tmp_path):
    file_pipe = mock_pipeline(tmp_path, seed=11)
    mem_pipe = Pipeline(MemoryJobStore(), Backends.mock(11), seed=11)
    a = file_pipe.run_to_rendered(file_pipe.create_job(REQ))
    b = mem_pipe.run_to_rendered(mem_pipe.create_job(REQ))
    # Artifact bytes are what must agree between stores.
    html_a = file_pipe.store.read_blob(a.id, "poster.html")
    html_b = mem_pipe.store.read_blob(b.id, "poster.html")
    assert html_a == html_b
    assert file_pipe.store.read_blob(a.id, a.renders[0].path) == \
        mem_pipe.store.read_blob(b.id, b.renders[0].path)


def test_single_dir_store_layout(tmp_path):
    out = tmp_path / "one-job"
    pipe = Pipeline(SingleDirStore(out), Backends.mock(5), seed=5)
    job = pipe.run_to_rendered(pipe.create_job(REQ))
    assert (out / "manifest.json").exists()
    assert (out / "poster.html").exists()
    assert (out / "background.png").exists()
    assert (out / "blueprint.json").exists()
    assert (out / "renders" / "scale-1.png").exists()
    assert SingleDirStore(out).load_only() == job


def test_end_to_end_determinism_bytes(tmp_path):
    def run(root):
        pipe = Pipeline(FileJobStore(root), Backends.mock(42), seed=42)
        job = pipe.run_to_rendered(pipe.create_job(REQ))
        html = pipe.store.read_blob(job.id, "poster.html")
        png = pipe.store.read_blob(job.id, job.renders[0].path)
        return hashlib.sha256(html).hexdigest(), hashlib.sha256(png).hexdigest()

    assert run(tmp_path / "r1") == run(tmp_path / "r2")


def test_transition_relation():
    from posterforge.pipeline import BLUEPRINT_READY, CREATED, LAYOUT_READY, RENDERED, failed

    assert transition_legal(CREATED, BLUEPRINT_READY)
    assert transition_legal(RENDERED, LAYOUT_READY)
    assert transition_legal(LAYOUT_READY, RENDERED)
    assert transition_legal(CREATED, failed("blueprint", "x"))
    assert not transition_legal(CREATED, LAYOUT_READY)
    assert not transition_legal(RENDERED, CREATED)
    assert not transition_legal(failed("a", "b"), failed("a", "b"))


def test_scale_slug():
    assert scale_slug(Fraction(1)) == "1"
    assert scale_slug(Fraction(1, 2)) == "0.5"
    assert scale_slug(Fraction(1, 3)) == "1_3"


def test_interrupted_save_leaves_previous_version_readable(tmp_path):
    pipe = mock_pipeline(tmp_path)
    job = pipe.advance(pipe.create_job(REQ))
    job_dir = tmp_path / "jobs" / job.id
    # Simulate a crash mid-save: a half-written temp file next to the
    # manifest must never shadow the committed rename.
    (job_dir / "manifest.json.tmp").write_bytes(b'{"version": 99, "corrupt')
    loaded = pipe.store.load(job.id)
    assert loaded == job
    assert loaded.version == job.version
