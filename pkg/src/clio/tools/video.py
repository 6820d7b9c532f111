"""Video download and frame sampling."""

from __future__ import annotations

import os
from dataclasses import dataclass

import cv2

from clio.errors import DecodeError


@dataclass
class FrameExtractionReport:
    video_title: str
    duration_seconds: float
    resolution: str
    frame_count: int
    output_dir: str

    def to_dict(self) -> dict:
        return {
            "video_title": self.video_title,
            "duration_seconds": self.duration_seconds,
            "resolution": self.resolution,
            "frame_count": self.frame_count,
            "output_dir": self.output_dir,
        }


def download_video(video_url: str, backends, dest_dir: str) -> dict:
    """Fetch a video to dest_dir; returns {'path', 'title'}."""
    os.makedirs(dest_dir, exist_ok=True)
    return backends.require("video").fetch(video_url, dest_dir)


def extract_frames(video_path: str, frames_per_second: float,
                   output_dir: str, title: str = "") -> FrameExtractionReport:
    """Sample frames at a fixed rate and write them as JPEG files.

    Frames are named frame_<timestamp-ms>.jpg so listing the directory
    reproduces temporal order. frame_count is the number of files written.
    """
    if frames_per_second <= 0:
        raise ValueError("frames_per_second must be positive")
    capture = cv2.VideoCapture(video_path)
    if not capture.isOpened():
        raise DecodeError(f"cannot decode video: {video_path}")
    try:
        native_fps = capture.get(cv2.CAP_PROP_FPS) or 0.0
        total_frames = int(capture.get(cv2.CAP_PROP_FRAME_COUNT) or 0)
        width = int(capture.get(cv2.CAP_PROP_FRAME_WIDTH) or 0)
        height = int(capture.get(cv2.CAP_PROP_FRAME_HEIGHT) or 0)
        if native_fps <= 0 or total_frames <= 0:
            raise DecodeError(f"video reports no frames: {video_path}")
        duration = total_frames / native_fps
        os.makedirs(output_dir, exist_ok=True)
        written = 0
        index = 0
        while True:
            timestamp = index / frames_per_second
            if timestamp >= duration:
                break
            frame_index = min(int(round(timestamp * native_fps)), total_frames - 1)
            capture.set(cv2.CAP_PROP_POS_FRAMES, frame_index)
            ok, frame = capture.read()
            if ok:
                millis = int(round(timestamp * 1000))
                name = os.path.join(output_dir, f"frame_{millis:08d}ms.jpg")
                cv2.imwrite(name, frame)
                written += 1
            index += 1
    finally:
        capture.release()
    return FrameExtractionReport(
        video_title=title,
        duration_seconds=duration,
        resolution=f"{width}x{height}",
        frame_count=written,
        output_dir=output_dir,
    )


def extract_video_frames(video_url: str, frames_per_second: float,
                         backends, workspace_dir: str) -> FrameExtractionReport:
    """Download a video and sample frames from it in one step."""
    download = download_video(video_url, backends,
                              os.path.join(workspace_dir, "downloads"))
    return extract_frames(download["path"], frames_per_second,
                          os.path.join(workspace_dir, "frames"),
                          title=download.get("title", ""))
