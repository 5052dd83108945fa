import json
import time

import pytest

from conftest import fixture_path
from jgrekit.detector import analyze, check_finding, classify_exploitability, detect
from jgrekit.ir import AnalysisConfig, SourceUnit, parse_corpus
from jgrekit.report import UnknownFormat, render_report

# Seeded vulnerable interfaces of the bundled corpus: (service, class, method).
SEEDED = {
    ("accessibility", "AccessibilityManagerService", "addAccessibilityInteractionConnection"),
    ("accessibility", "AccessibilityManagerService", "addClient"),
    ("activity", "ActivityManagerService", "registerReceiver"),
    ("appops", "AppOpsService", "startWatchingMode"),
    ("appops", "AppOpsService", "startWatchingActive"),
    ("appops", "AppOpsManager", "startWatchingMode"),
    ("audio", "AudioService", "startWatchingRoutes"),
    ("audio", "AudioService", "registerPlaybackCallback"),
    ("audio", "AudioService", "registerRecordingCallback"),
    ("audio", "AudioManager", "startWatchingRoutes"),
    ("clipboard", "ClipboardService", "addPrimaryClipChangedListener"),
    ("content", "ContentService", "registerContentObserver"),
    ("content", "ContentService", "addStatusChangeListener"),
    ("country_detector", "CountryDetectorService", "addCountryListener"),
    ("deviceidle", "DeviceIdleController", "registerMaintenanceActivityListener"),
    ("fingerprint", "FingerprintService", "addLockoutResetCallback"),
    ("input", "InputManagerService", "vibrate"),
    ("media_session", "MediaSessionService", "registerCallbackListener"),
    ("midi", "MidiService", "registerDeviceServer"),
    ("mount", "StorageManagerService", "registerListener"),
    ("network_management", "NetworkManagementService", "registerNetworkActivityListener"),
    ("print", "PrintManagerService", "addPrintJobStateChangeListener"),
    ("print", "PrintManagerService", "createPrinterDiscoverySession"),
    ("telephony.registry", "TelephonyRegistry", "listen"),
    ("telephony.registry", "TelephonyRegistry", "addOnSubscriptionsChangedListener"),
    ("wallpaper", "WallpaperManagerService", "registerWallpaperColorsCallback"),
    ("wifi", "WifiServiceImpl", "acquireWiFiLock"),
    ("wifi", "WifiServiceImpl", "acquireMulticastLock"),
    ("window", "WindowManagerService", "watchRotation"),
}
# Constant-key registries: at most one live record, so no real leak.
KNOWN_FP = {
    ("statusbar", "StatusBarManagerService", "registerStatusBar"),
    ("display", "DisplayManagerService", "registerCallback"),
}
DECOY_SERVICES = {"alarm", "notification", "location", "backup", "power"}


def keys(findings):
    return {(f.entry.service_name, f.entry.cls.rsplit(".", 1)[-1], f.entry.method) for f in findings}


def parse(text, config=None):
    return parse_corpus([SourceUnit("d.jgr", text)], config)


def test_golden_set(corpus_db):
    t0 = time.perf_counter()
    findings = detect(corpus_db)
    assert time.perf_counter() - t0 < 5
    assert keys(findings) == SEEDED | KNOWN_FP
    assert not {f.entry.service_name for f in findings} & DECOY_SERVICES


def test_golden_shape(corpus_db):
    a = analyze(corpus_db)
    services = {f.entry.service_name for f in a.findings if (f.entry.service_name, f.entry.cls.rsplit(".", 1)[-1], f.entry.method) in SEEDED}
    assert len(services) == 19 and len(SEEDED) == 29
    assert sum(f.entry.kind == "service_helper" for f in a.findings) == 2
    assert [d.code for d in a.diagnostics] == ["NativeServiceSkipped"]


def test_audio_finding_goes_through_linktodeath(corpus_db):
    (f,) = [f for f in detect(corpus_db) if f.key == ("audio", "com.android.server.audio.AudioService", "startWatchingRoutes")]
    assert f.managed_path == (
        "com.android.server.audio.AudioService.startWatchingRoutes",
        "android.os.RemoteCallbackList.register",
        "android.os.BinderProxy.linkToDeath",
    )
    assert f.native_path.frames[0] == "android_os_BinderProxy_linkToDeath"
    assert f.escape.container == ("com.android.server.audio.AudioService", "mRoutesObservers")
    assert f.escape.sink_signature == "android.os.RemoteCallbackList.register" and f.escape.binder_related


def test_helper_finding_records_service_entry(corpus_db):
    (f,) = [f for f in detect(corpus_db) if f.entry.cls == "android.media.AudioManager"]
    assert f.via == "com.android.server.audio.AudioService.startWatchingRoutes"
    assert f.managed_path[0] == "android.media.AudioManager.startWatchingRoutes"


def test_witnesses_recheck(corpus_db):
    for f in detect(corpus_db):
        assert check_finding(corpus_db, f) == [], f.key


def test_exploitability_partition(corpus_db):
    by = {f.entry.method: f.exploitability for f in detect(corpus_db) if f.entry.kind == "system_service"}
    assert by["registerNetworkActivityListener"] == "permission_gated"
    assert by["registerDeviceServer"] == "hidden"
    assert by["watchRotation"] == "greylist"
    assert by["startWatchingRoutes"] == "greylist"
    assert by["addClient"] == "public"
    for f in detect(corpus_db):
        assert f.exploitability in ("public", "greylist", "hidden", "permission_gated")


def test_classify_from_config(corpus_db):
    f = next(f for f in detect(corpus_db) if f.entry.method == "addClient")
    assert classify_exploitability(f, AnalysisConfig()) == "public"
    grey = AnalysisConfig(greylist=frozenset({f.entry.method_id}))
    assert classify_exploitability(f, grey) == "greylist"


LEAK_SRC = """
extern java.util.ArrayList
extern android.os.IBinder
extern android.os.ServiceManager
managed class Peer {
    method pin(b: android.os.IBinder) native;
}
jni_register class=Peer { "pin" -> peer_pin }
native fn peer_pin(env, obj, b) { call env.NewGlobalRef(b) }
managed class S {
    field mList: java.util.ArrayList
    field mPeer: Peer
    method both(b: android.os.IBinder) {
        p = this.mPeer
        call p.pin(b)
        l = this.mList
        call l.add(b)
    }
    method localOnly(b: android.os.IBinder) {
        p = this.mPeer
        call p.pin(b)
        l = new java.util.ArrayList
        call l.add(b)
    }
    method storeOnly(b: android.os.IBinder) {
        l = this.mList
        call l.add(b)
    }
}
managed class Boot {
    method main() {
        s = new S
        scall android.os.ServiceManager.addService("s", s)
    }
}
"""


def test_both_conditions_required():
    fs = detect(parse(LEAK_SRC))
    assert [f.entry.method for f in fs] == ["both"]


def test_render_empty_json():
    assert json.loads(render_report([], "json")) == {"version": 1, "findings": []}
    assert render_report([], "json").replace(" ", "") == '{"version":1,"findings":[]}'


def test_render_csv_lines(corpus_db):
    fs = detect(corpus_db)
    assert len(render_report(fs, "csv").splitlines()) == len(fs) + 1


def test_render_table_groups_audio(corpus_db):
    fs = [f for f in detect(corpus_db) if f.entry.service_name == "audio"]
    lines = render_report(fs, "table").splitlines()
    rows = lines[2:-2]
    assert len(rows) == 4
    assert rows[0].startswith("audio ") and all(r.startswith(" ") for r in rows[1:])


def test_render_table_golden(corpus_db):
    assert render_report(detect(corpus_db), "table") == fixture_path("golden_table.txt").read_text()


def test_unknown_format():
    with pytest.raises(UnknownFormat):
        render_report([], "xml")
