# -*- coding: utf-8 -*-

__title__ = "gyrocal"  # noqa: E401
__description__ = (
    "Gyroscope error simulation, Allan variance identification, least-squares "
    "calibration and learned bias estimation from short stationary windows."
)  # noqa: E401
__author__ = """gyrocal developers"""  # noqa: E401
__author_email__ = "gyrocal@users.noreply.github.com"  # noqa: E401
# bumpversion v0.5.3 doesn't handle version string in double quotes correctly so
# prevent Black to format it:
# fmt: off
__version__ = '0.1.0'  # noqa: E401
# fmt: on
