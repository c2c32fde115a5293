import datetime
import json
import logging

from sqlalchemy import desc
from sqlalchemy.orm import Session

from models import LevelResultModel, RunModel
from utils import json_default

logger = logging.getLogger(__name__)


def add_run(session: Session, experiment: str, config: dict, config_hash: str, slope, stagnated: bool,
            version: str) -> int:
    """
    添加一次运行记录
    :return: int, 运行id
    """
    run = RunModel(
        experiment=experiment,
        created_time=datetime.datetime.now(),
        config_hash=config_hash,
        config_json=json.dumps(config, sort_keys=True, default=json_default),
        slope=slope,
        stagnated=stagnated,
        version=version,
    )
    session.add(run)
    session.commit()
    logger.info(f"新增运行记录：{experiment}, id = {run.id}")
    return run.id


def add_level_results(session: Session, run_id: int, rows: list):
    """
    添加一次运行的各层级结果
    :param rows: list[dict], 键为 dofs, s, j, iterations, wall_time, e, error
    """
    for row in rows:
        session.add(LevelResultModel(
            run_id=run_id,
            dofs=row["dofs"],
            s=row.get("s"),
            j=row.get("j"),
            iterations=row.get("iterations"),
            wall_time=row.get("wall_time", 0.0),
            e=row.get("e"),
            error=row.get("error"),
        ))
    session.commit()


def get_run_by_id(session: Session, run_id: int):
    """返回id对应的运行记录，不存在时返回None"""
    return session.query(RunModel).filter_by(id=run_id).first()


def get_level_results(session: Session, run_id: int):
    """返回运行的各层级结果，按 dofs 升序"""
    return (
        session.query(LevelResultModel)
        .filter_by(run_id=run_id)
        .order_by(LevelResultModel.dofs, LevelResultModel.id)
        .all()
    )


def get_runs_by_experiment(session: Session, experiment: str = None, limit: int = 20):
    """最近的运行记录，experiment 为空时返回全部实验"""
    query = session.query(RunModel)
    if experiment:
        query = query.filter_by(experiment=experiment)
    return query.order_by(desc(RunModel.created_time)).limit(limit).all()


def get_run_count(session: Session):
    """获取运行记录总数"""
    return session.query(RunModel).count()


def delete_run(session: Session, run_id: int):
    """删除运行记录及其层级结果"""
    session.query(LevelResultModel).filter_by(run_id=run_id).delete()
    session.query(RunModel).filter_by(id=run_id).delete()
    session.commit()
