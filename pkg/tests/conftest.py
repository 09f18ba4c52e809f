import pytest

from deskloop.kinematics import default_arm
from deskloop.perception import OracleDetector, overhead_camera
from deskloop.registry import default_registry
from deskloop.skills import SkillExecutor


@pytest.fixture(scope="session")
def registry():
    return default_registry()


@pytest.fixture(scope="session")
def camera(registry):
    return overhead_camera(registry)


@pytest.fixture
def make_executor(registry, camera):
    def build(scene, fail_prob=0.0, degradation=None):
        from deskloop.perception import DetectorDegradation

        detector = OracleDetector(camera, degradation or DetectorDegradation())
        return SkillExecutor(
            scene,
            detector=detector,
            camera=camera,
            arm=default_arm(registry),
            fail_prob=fail_prob,
            registry=registry,
        )

    return build
