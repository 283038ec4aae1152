"""Ground-truth object database and SECOND-style object insertion.

On disk a database is a directory holding ``index.json`` and one
``<class>.bin`` blob per class. Each blob is a sequence of records, each a
64-byte little-endian header ``<i 7d I`` (class id, ``cx cy cz l w h yaw``,
point count) followed by that many 16-byte float32 point records.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import datetime
import json
import os
from pathlib import Path
import struct

import numpy as np

from . import kitti
from .errors import DegenerateBox, EmptyClass, MalformedData, MalformedDatabase
from .geometry import Box3D, as_cloud, bev_overlap_area, points_in_box, points_in_box_mask

HEADER = struct.Struct("<i7dI")
INDEX_NAME = "index.json"
FORMAT_VERSION = 1


@dataclass
class GtObject:
    class_name: str
    box: Box3D
    points: np.ndarray
    source_frame: str = ""

    @property
    def num_points(self):
        return len(self.points)

    @property
    def distance(self):
        return self.box.distance


@dataclass
class GtDatabase:
    objects: dict = field(default_factory=dict)  # class name -> list of GtObject
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return sum(len(v) for v in self.objects.values())

    def class_counts(self):
        return {k: len(v) for k, v in self.objects.items()}

    def filter_min_points(self, min_points):
        """Copy keeping objects with at least ``min_points[class]`` points."""
        kept = {
            cls: [o for o in objs if o.num_points >= min_points.get(cls, 0)]
            for cls, objs in self.objects.items()
        }
        return GtDatabase(kept, dict(self.metadata))


def _frame_objects(frame_id, cloud, labels, calib, classes):
    cloud = as_cloud(cloud)
    out = []
    for lab in labels:
        if lab.class_name not in classes:
            continue
        try:
            box = kitti.label_to_lidar_box(lab, calib)
        except (MalformedData, DegenerateBox) as err:
            raise MalformedData(f"frame {frame_id}: {err}") from err
        idx = points_in_box(cloud, box)
        out.append(GtObject(lab.class_name, box, cloud[idx].copy(), str(frame_id)))
    return out


def build_database(frames, classes=kitti.AUGMENT_CLASSES, split="", workers=1):
    """Collect every labelled object of ``classes`` with its interior points.

    Args:
        frames: iterable of ``(frame_id, cloud, labels, calib)``.
        classes: class names to keep; DontCare and other classes are skipped.
        workers: thread count; results merge in frame-id order regardless.

    Objects with no interior points are kept; filter with
    :meth:`GtDatabase.filter_min_points`.
    """
    frames = sorted(frames, key=lambda f: str(f[0]))
    classes = tuple(classes)

    def one(f):
        return _frame_objects(f[0], f[1], f[2], f[3], classes)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            per_frame = list(pool.map(one, frames))
    else:
        per_frame = [one(f) for f in frames]

    objects = {c: [] for c in classes}
    for objs in per_frame:
        for o in objs:
            objects[o.class_name].append(o)
    meta = {
        "split": split,
        "created": _timestamp(),
        "class_counts": {c: len(v) for c, v in objects.items()},
    }
    return GtDatabase(objects, meta)


def _timestamp():
    # SOURCE_DATE_EPOCH pins the stamp for reproducible builds
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    now = (datetime.datetime.fromtimestamp(int(epoch), datetime.timezone.utc) if epoch
           else datetime.datetime.now(datetime.timezone.utc))
    return now.replace(microsecond=0).isoformat()


def sample_objects(db, class_name, count, rng):
    """Draw ``count`` distinct objects uniformly (clamped to the class size)."""
    objs = db.objects.get(class_name, [])
    if not objs:
        raise EmptyClass(class_name)
    if count <= 0:
        return []
    idx = rng.choice(len(objs), size=min(count, len(objs)), replace=False)
    return [objs[i] for i in idx]


def insert_objects(cloud, boxes, candidates):
    """Paste candidates into a frame, skipping any that collide.

    A candidate is rejected when its footprint overlaps (positive area) any
    frame box or any previously accepted candidate. For an accepted one, the
    scene points in the full-height column of its footprint are removed
    before its own points are appended.

    Returns:
        (cloud, boxes, accepted) where ``boxes`` is the list of frame boxes
        followed by the accepted candidate boxes and ``accepted`` lists the
        accepted candidates in order.
    """
    cloud = as_cloud(cloud)
    placed = list(boxes)
    accepted = []
    for cand in candidates:
        if any(bev_overlap_area(cand.box, b) > 0.0 for b in placed):
            continue
        keep = ~points_in_box_mask(cloud, cand.box, column=True)
        cloud = np.vstack([cloud[keep], as_cloud(cand.points)])
        placed.append(cand.box)
        accepted.append(cand)
    return cloud, placed, accepted


def save_database(db, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    index = {"format_version": FORMAT_VERSION, "metadata": db.metadata, "classes": {}}
    for class_id, (cls, objs) in enumerate(sorted(db.objects.items())):
        blob_name = f"{cls}.bin"
        entries, chunks, offset = [], [], 0
        for o in objs:
            header = HEADER.pack(class_id, *o.box.to_array(), o.num_points)
            body = kitti.write_point_cloud(o.points)
            entries.append({
                "offset": offset,
                "num_points": o.num_points,
                "distance": o.distance,
                "source_frame": o.source_frame,
            })
            chunks += [header, body]
            offset += len(header) + len(body)
        (directory / blob_name).write_bytes(b"".join(chunks))
        index["classes"][cls] = {"class_id": class_id, "count": len(objs), "blob": blob_name,
                                 "objects": entries}
    (directory / INDEX_NAME).write_text(json.dumps(index, indent=1, sort_keys=True) + "\n")


def load_database(directory, classes=None):
    directory = Path(directory)
    try:
        index = json.loads((directory / INDEX_NAME).read_text())
    except json.JSONDecodeError as err:
        raise MalformedDatabase(f"{directory / INDEX_NAME}: {err}") from None
    objects = {}
    for cls, entry in index["classes"].items():
        if classes is not None and cls not in classes:
            continue
        blob = (directory / entry["blob"]).read_bytes()
        objs = []
        for meta in entry["objects"]:
            off = meta["offset"]
            if off + HEADER.size > len(blob):
                raise MalformedDatabase(f"{entry['blob']}: record at {off} runs past end of blob")
            class_id, *box, n = HEADER.unpack_from(blob, off)
            start = off + HEADER.size
            if class_id != entry["class_id"] or n != meta["num_points"] or start + 16 * n > len(blob):
                raise MalformedDatabase(f"{entry['blob']}: inconsistent record at offset {off}")
            pts = kitti.read_point_cloud(blob[start:start + 16 * n])
            objs.append(GtObject(cls, Box3D(*box), pts, meta["source_frame"]))
        objects[cls] = objs
    return GtDatabase(objects, index.get("metadata", {}))


def check_no_overlap(boxes):
    """True when no two boxes overlap with positive footprint area."""
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            if bev_overlap_area(boxes[i], boxes[j]) > 0.0:
                return False
    return True

