import hashlib
import json
import shutil
from pathlib import Path
from typing import Dict, Optional

from checkpoint import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from config import TrainConfig

CACHE_VERSION = "2"


class CheckpointCache:
    """Fájl-alapú checkpoint cache a kísérleti rács celláihoz (megszakított futás folytatható)"""

    def __init__(self, cache_dir=".aqs_cache"):
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)

    def get_cache_key(self, dataset_id: str, label: str, horizon: int, config: TrainConfig,
                      val_fraction: float = 0.20) -> str:
        """Cache kulcs: adathalmaz + beállítás + horizont + config fingerprint + validációs arány"""
        key_data = {
            "dataset": dataset_id,
            "label": label,
            "horizon": horizon,
            "config": config.fingerprint(),
            "val_fraction": repr(float(val_fraction)),
            "version": CACHE_VERSION,
        }
        key_string = json.dumps(key_data, sort_keys=True)
        return hashlib.md5(key_string.encode()).hexdigest()

    def _path(self, cache_key: str) -> Path:
        return self.cache_dir / f"{cache_key}.aqs"

    def get(self, cache_key: str) -> Optional[Checkpoint]:
        cache_file = self._path(cache_key)
        if not cache_file.exists():
            return None
        try:
            return load_checkpoint(cache_file)
        except CheckpointError as e:
            # Hibás cache fájl törlése, a cella újraszámolódik
            print(f"    ⚠️ Sérült cache bejegyzés törölve: {cache_file.name} ({e})")
            try:
                cache_file.unlink()
            except OSError:
                pass
            return None

    def put(self, cache_key: str, ck: Checkpoint) -> bool:
        cache_file = self._path(cache_key)
        tmp_file = cache_file.with_suffix(".tmp")
        try:
            save_checkpoint(ck, tmp_file)
            tmp_file.replace(cache_file)
            return True
        except (CheckpointError, OSError) as e:
            print(f"    ⚠️ Cache írási hiba: {e}")
            return False

    def get_cache_stats(self) -> Dict:
        cache_files = list(self.cache_dir.glob("*.aqs"))
        total_size = sum(f.stat().st_size for f in cache_files if f.exists())
        return {
            "total_files": len(cache_files),
            "total_size_mb": round(total_size / (1024 * 1024), 2),
            "cache_directory": str(self.cache_dir),
        }

    def clear_all_cache(self) -> Dict:
        """Teljes cache mappa törlése"""
        if not self.cache_dir.exists():
            return {"deleted_files": 0, "status": "Cache mappa nem létezik"}
        deleted_files = sum(1 for f in self.cache_dir.rglob("*") if f.is_file())
        try:
            shutil.rmtree(self.cache_dir)
            self.cache_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            return {"deleted_files": 0, "status": "error", "message": f"Hiba a cache törlésekor: {e}"}
        return {
            "deleted_files": deleted_files,
            "status": "success",
            "message": f"Teljes cache törölve: {deleted_files} fájl",
        }
