import pymysql

conn = pymysql.connect(host="db.acme-shop.cn", user="svc", password="Tq9wLm2Xcv", database="notes_app")
cur = conn.cursor()
cur.execute("SELECT title, body FROM notes WHERE author_id = %s", (7,))
